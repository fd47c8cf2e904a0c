#include "semblur/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "semblur/error.hpp"
#include "semblur/io.hpp"

namespace semblur {

Index Vocabulary::index_of(const std::string& term) const {
  auto it = std::find(terms.begin(), terms.end(), term);
  return it == terms.end() ? -1 : static_cast<Index>(it - terms.begin());
}

std::vector<std::string> tokenize(const std::string& text,
                                  const StopwordSet& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !stopwords.count(current)) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

CorpusMatrix build_occurrence(const std::vector<Document>& docs,
                              const StopwordSet& stopwords) {
  Vocabulary vocab;
  std::unordered_map<std::string, Index> term_to_col;
  std::vector<Triplet> trips;
  bool any_token = false;

  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::vector<Index> cols;
    for (const auto& tok : tokenize(docs[i].text, stopwords)) {
      auto [it, inserted] = term_to_col.try_emplace(tok, vocab.size());
      if (inserted) {
        vocab.terms.push_back(tok);
        vocab.doc_frequency.push_back(0);
      }
      cols.push_back(it->second);
    }
    if (cols.empty()) continue;
    any_token = true;
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (Index c : cols) {
      trips.emplace_back(static_cast<Index>(i), c, 1.0);
      ++vocab.doc_frequency[c];
    }
  }
  if (!any_token)
    throw Error(ErrorCode::AllDocsEmpty, "every document tokenized to nothing");

  SpMat m(static_cast<Index>(docs.size()), vocab.size());
  m.setFromTriplets(trips.begin(), trips.end());
  return {std::move(vocab), std::move(m)};
}

namespace {

FilterResult keep_columns_where(const SpMat& m, const std::vector<bool>& keep_mask) {
  FilterResult res;
  for (Index j = 0; j < m.cols(); ++j)
    (keep_mask[j] ? res.kept : res.removed).push_back(j);
  if (res.kept.empty())
    throw Error(ErrorCode::EmptyMatrix, "filter removed every column");
  res.matrix = select_columns(m, res.kept);
  return res;
}

}  // namespace

FilterResult high_pass_filter(const SpMat& m, double min_df) {
  if (min_df < 0)
    throw Error(ErrorCode::ConfigError, "min_df must be >= 0");
  const Vector sums = col_sums(m);
  std::vector<bool> keep(m.cols());
  for (Index j = 0; j < m.cols(); ++j) keep[j] = sums[j] > min_df;
  return keep_columns_where(m, keep);
}

FilterResult low_pass_filter(const SpMat& m, double quantile) {
  // quantile 1.0 is the no-removal limit: the threshold is the max sum
  if (!(quantile > 0.0 && quantile <= 1.0))
    throw Error(ErrorCode::ConfigError, "quantile must be in (0, 1]");
  const Vector sums = col_sums(m);
  std::vector<double> sorted(sums.data(), sums.data() + sums.size());
  std::sort(sorted.begin(), sorted.end());
  // linear-interpolation empirical quantile
  const double pos = quantile * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  const double threshold = sorted[lo] + frac * (sorted[hi] - sorted[lo]);

  std::vector<bool> keep(m.cols());
  for (Index j = 0; j < m.cols(); ++j) keep[j] = !(sums[j] > threshold);
  return keep_columns_where(m, keep);
}

Vocabulary select_vocab(const Vocabulary& v, const std::vector<Index>& kept) {
  Vocabulary out;
  out.terms.reserve(kept.size());
  out.doc_frequency.reserve(kept.size());
  for (Index j : kept) {
    out.terms.push_back(v.terms[j]);
    out.doc_frequency.push_back(v.doc_frequency[j]);
  }
  return out;
}

std::vector<Document> load_jsonl_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::size_t lineno = 0;
  for (const auto& line : read_all_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("text"))
      throw Error(ErrorCode::MalformedLine,
                  path.string() + ":" + std::to_string(lineno) +
                      ": expected {id, text[, label]} object");
    Document d;
    d.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    d.text = j["text"].get<std::string>();
    if (j.contains("label") && !j["label"].is_null())
      d.label = j["label"].get<std::string>();
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<Document> load_text_dir_corpus(
    const std::filesystem::path& dir,
    const std::optional<std::filesystem::path>& labels_csv) {
  std::unordered_map<std::string, std::string> labels;
  if (labels_csv) {
    for (const auto& line : read_all_lines(*labels_csv)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw Error(ErrorCode::MalformedLine, "labels CSV row without comma: " + line);
      labels[line.substr(0, comma)] = line.substr(comma + 1);
    }
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<Document> docs;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    Document d;
    d.id = f.stem().string();
    d.text = std::move(text);
    if (auto it = labels.find(f.filename().string()); it != labels.end())
      d.label = it->second;
    else if (auto it2 = labels.find(d.id); it2 != labels.end())
      d.label = it2->second;
    docs.push_back(std::move(d));
  }
  return docs;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  StopwordSet set;
  for (const auto& line : read_all_lines(path)) {
    // fold each entry exactly like document text so lookups match
    for (const auto& tok : tokenize(line, {})) set.insert(tok);
  }
  return set;
}

}  // namespace semblur
