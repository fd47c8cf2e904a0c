#include "semblur/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "semblur/error.hpp"
#include "semblur/io.hpp"
#include "semblur/parallel.hpp"

namespace semblur {

namespace {

std::string lowercase_ascii(const std::string& s) {
  std::string out = s;
  for (auto& c : out)
    if (static_cast<unsigned char>(c) < 0x80)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// splits on single spaces/tabs; returns false if any component fails to parse
bool parse_components(const std::string& line, std::size_t from,
                      std::vector<double>& out) {
  out.clear();
  const char* p = line.data() + from;
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    if (p >= end) break;
    double v;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) return false;
    out.push_back(v);
    p = next;
  }
  return true;
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::unordered_map<std::string, Index> exact;
  std::unordered_map<std::string, Index> folded;
  for (Index j = 0; j < vocab.size(); ++j) {
    exact.emplace(vocab.terms[j], j);
    folded.emplace(lowercase_ascii(vocab.terms[j]), j);
  }

  std::vector<std::vector<double>> rows(vocab.size());
  int dim = -1;
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> comps;
  bool first_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto sep = line.find_first_of(" \t");
    if (sep == std::string::npos)
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(lineno) + ": no components");
    const std::string token = line.substr(0, sep);
    if (!parse_components(line, sep, comps))
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(lineno) + ": bad number");
    if (first_line) {
      first_line = false;
      // optional "count dim" header: token numeric and exactly one component
      if (comps.size() == 1 &&
          std::all_of(token.begin(), token.end(),
                      [](unsigned char c) { return std::isdigit(c); })) {
        dim = static_cast<int>(comps[0]);
        if (dim < 1)
          throw Error(ErrorCode::MalformedLine, "header dim must be >= 1");
        continue;
      }
    }
    if (dim < 0) dim = static_cast<int>(comps.size());
    if (static_cast<int>(comps.size()) != dim)
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(dim) + " components, got " +
                      std::to_string(comps.size()));
    Index target = -1;
    if (auto it = exact.find(token); it != exact.end()) target = it->second;
    else if (auto it2 = folded.find(lowercase_ascii(token)); it2 != folded.end())
      target = it2->second;
    if (target >= 0 && rows[target].empty()) rows[target] = comps;
  }

  EmbeddingTable table;
  table.dim = std::max(dim, 0);
  table.row_of.assign(vocab.size(), -1);
  for (Index j = 0; j < vocab.size(); ++j)
    if (!rows[j].empty()) {
      table.row_of[j] = static_cast<Index>(table.covered.size());
      table.covered.push_back(j);
    }
  if (table.covered.empty())
    throw Error(ErrorCode::EmptyIntersection,
                "no vocabulary term has a vector in " + path.string());
  table.vectors.resize(table.covered_count(), table.dim);
  for (Index r = 0; r < table.covered_count(); ++r)
    for (int d = 0; d < table.dim; ++d)
      table.vectors(r, d) = rows[table.covered[r]][d];
  return table;
}

EmbeddingTable row_stochastic(EmbeddingTable table, RowNormalization norm) {
  for (Index r = 0; r < table.vectors.rows(); ++r) {
    const double mass = norm == RowNormalization::L1Abs
                            ? table.vectors.row(r).cwiseAbs().sum()
                            : table.vectors.row(r).sum();
    if (mass == 0.0 || !std::isfinite(1.0 / mass))
      throw Error(ErrorCode::ZeroVector,
                  "vector with zero mass at covered row " + std::to_string(r));
    table.vectors.row(r) /= mass;
  }
  return table;
}

NeighborhoodIndex::NeighborhoodIndex(const EmbeddingTable& table, int k,
                                     int threads)
    : table_(table), k_(k), covered_(table.covered) {
  if (k < 1) throw Error(ErrorCode::ConfigError, "k must be >= 1");
  const Index n = table_.covered_count();
  by_term_.resize(table_.row_of.size());

  const DenseMat& x = table_.vectors;
  const Vector sq = x.rowwise().squaredNorm();

  // exact blocked all-pairs scan; rows are independent so this parallelizes
  // without affecting the result
  const Index block = 256;
  const Index nblocks = (n + block - 1) / block;
  parallel_for(static_cast<std::size_t>(nblocks), threads, [&](std::size_t b) {
    const Index begin = static_cast<Index>(b) * block;
    const Index end = std::min(n, begin + block);
    DenseMat d2 = (-2.0 * x.middleRows(begin, end - begin) * x.transpose());
    for (Index r = begin; r < end; ++r) {
      std::vector<std::pair<double, Index>> cand;
      cand.reserve(n - 1);
      for (Index c = 0; c < n; ++c) {
        if (c == r) continue;
        const double dist2 = std::max(0.0, d2(r - begin, c) + sq[r] + sq[c]);
        cand.emplace_back(dist2, covered_[c]);
      }
      const auto take = std::min<std::size_t>(k_, cand.size());
      std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
      Neighborhood nb;
      nb.terms.push_back(covered_[r]);
      nb.distances.push_back(0.0);
      for (std::size_t i = 0; i < take; ++i) {
        nb.terms.push_back(cand[i].second);
        nb.distances.push_back(std::sqrt(cand[i].first));
      }
      nb.sigma = nb.distances.back();
      by_term_[covered_[r]] = std::move(nb);
    }
  });
}

const Neighborhood& NeighborhoodIndex::neighborhood(Index term) const {
  if (term < 0 || term >= static_cast<Index>(by_term_.size()) ||
      by_term_[term].terms.empty())
    throw Error(ErrorCode::UncoveredTerm,
                "term " + std::to_string(term) + " has no embedding");
  return by_term_[term];
}

void write_coverage_report(const std::filesystem::path& path,
                           const Vocabulary& vocab,
                           const EmbeddingTable& table) {
  std::vector<std::string> lines;
  lines.reserve(vocab.terms.size() + 1);
  lines.push_back("term,covered");
  for (Index j = 0; j < vocab.size(); ++j)
    lines.push_back(vocab.terms[j] + (table.is_covered(j) ? ",1" : ",0"));
  write_lines(path, lines);
}

}  // namespace semblur
