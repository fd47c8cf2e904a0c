#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/SVD>

#include "semblur/corpus.hpp"
#include "semblur/io.hpp"
#include "semblur/matrix.hpp"
#include "semblur/rng.hpp"

namespace testing {

using semblur::DenseMat;
using semblur::Index;
using semblur::Rng;
using semblur::SpMat;
using semblur::Triplet;
using semblur::Vector;

inline SpMat from_dense(const DenseMat& m) {
  std::vector<Triplet> trips;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) trips.emplace_back(i, j, m(i, j));
  SpMat out(m.rows(), m.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline SpMat random_binary(Rng& rng, Index rows, Index cols, double density) {
  std::vector<Triplet> trips;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (rng.uniform() < density) trips.emplace_back(i, j, 1.0);
  SpMat out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline SpMat random_sparse(Rng& rng, Index rows, Index cols, double density) {
  std::vector<Triplet> trips;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (rng.uniform() < density) trips.emplace_back(i, j, rng.uniform() + 0.05);
  SpMat out(rows, cols);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// k distinct values from [0, n), seeded partial Fisher-Yates
inline std::vector<int> sample_distinct(Rng& rng, int n, int k) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

// --------------------------------------------------------------------------
// Synthetic themed corpus: `themes` disjoint vocabularies of `terms_per`
// canonical terms plus a shared noise pool. With `synonyms` > 0 every
// canonical term gets that many interchangeable variants and each emitted
// token is replaced by a random variant with probability `syn_prob`.
// --------------------------------------------------------------------------
struct SyntheticCorpus {
  std::vector<semblur::Document> docs;  // text form, label = "theme<i>"
  std::vector<int> truth;               // theme per document
  SpMat occurrence;                     // binary doc x term, generator ids
  std::vector<std::vector<int>> groups; // term ids per synonym group
  int vocab = 0;
  int themes = 0;

  std::string term_name(int id) const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%05d", id);
    return buf;
  }
};

struct SyntheticSpec {
  int themes = 5;
  int docs_per_theme = 100;
  int terms_per_theme = 200;
  int noise_terms = 100;
  int doc_len = 12;    // distinct theme groups per document
  int noise_len = 4;   // distinct noise groups per document
  int synonyms = 0;    // variants per canonical term
  double syn_prob = 0.3;
};

inline SyntheticCorpus make_synthetic(std::uint64_t seed,
                                      const SyntheticSpec& spec = {}) {
  Rng rng(seed);
  SyntheticCorpus c;
  c.themes = spec.themes;

  std::vector<std::vector<int>> theme_groups(spec.themes);
  int next_id = 0;
  auto add_group = [&] {
    std::vector<int> members;
    for (int s = 0; s <= spec.synonyms; ++s) members.push_back(next_id++);
    c.groups.push_back(members);
    return static_cast<int>(c.groups.size()) - 1;
  };
  for (int t = 0; t < spec.themes; ++t)
    for (int g = 0; g < spec.terms_per_theme; ++g)
      theme_groups[t].push_back(add_group());
  std::vector<int> noise_groups;
  for (int g = 0; g < spec.noise_terms; ++g) noise_groups.push_back(add_group());
  c.vocab = next_id;

  std::vector<Triplet> trips;
  int doc_index = 0;
  for (int t = 0; t < spec.themes; ++t) {
    for (int d = 0; d < spec.docs_per_theme; ++d, ++doc_index) {
      std::vector<int> gs;
      for (int g : sample_distinct(rng, spec.terms_per_theme, spec.doc_len))
        gs.push_back(theme_groups[t][g]);
      for (int g : sample_distinct(rng, spec.noise_terms, spec.noise_len))
        gs.push_back(noise_groups[g]);

      std::string text;
      std::vector<int> terms;
      for (int g : gs) {
        const auto& mem = c.groups[g];
        int term = mem[0];
        if (mem.size() > 1 && rng.uniform() < spec.syn_prob)
          term = mem[1 + rng.uniform_int(mem.size() - 1)];
        terms.push_back(term);
        if (!text.empty()) text += ' ';
        text += c.term_name(term);
      }
      std::sort(terms.begin(), terms.end());
      terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
      for (int term : terms) trips.emplace_back(doc_index, term, 1.0);

      semblur::Document doc;
      char id[16];
      std::snprintf(id, sizeof(id), "d%04d", doc_index);
      doc.id = id;
      doc.text = text;
      doc.label = "theme" + std::to_string(t);
      c.docs.push_back(std::move(doc));
      c.truth.push_back(t);
    }
  }
  c.occurrence.resize(doc_index, c.vocab);
  c.occurrence.setFromTriplets(trips.begin(), trips.end());
  return c;
}

// one well separated base point per synonym group, members jittered; all
// vectors positive and L1-normalized
inline DenseMat make_group_embeddings(const SyntheticCorpus& c, int dim,
                                      double eps, std::uint64_t seed) {
  Rng rng(seed ^ 0x777ULL);
  DenseMat e(c.vocab, dim);
  for (const auto& mem : c.groups) {
    Vector base(dim);
    for (int d = 0; d < dim; ++d) base[d] = rng.uniform() + 0.1;
    base /= base.sum();
    for (int tid : mem) {
      Vector v = base;
      for (int d = 0; d < dim; ++d) v[d] += eps * rng.normal() / dim;
      v = v.cwiseAbs();
      e.row(tid) = v / v.sum();
    }
  }
  return e;
}

inline void write_embedding_file(const std::filesystem::path& path,
                                 const SyntheticCorpus& c, const DenseMat& e) {
  std::ofstream out(path);
  for (Index t = 0; t < e.rows(); ++t) {
    out << c.term_name(static_cast<int>(t));
    for (Index d = 0; d < e.cols(); ++d)
      out << ' ' << semblur::format_double(e(t, d));
    out << '\n';
  }
}

inline void write_jsonl_corpus(const std::filesystem::path& path,
                               const SyntheticCorpus& c) {
  std::ofstream out(path);
  for (const auto& d : c.docs) {
    out << "{\"id\":\"" << d.id << "\",\"text\":\"" << d.text
        << "\",\"label\":\"" << *d.label << "\"}\n";
  }
}

// over-split init for revision tests: each theme's documents divided into
// chunks of the given sizes (sizes must sum to docs_per_theme)
inline std::vector<std::int32_t> oversplit_init(const SyntheticCorpus& c,
                                                const std::vector<int>& sizes) {
  std::vector<std::int32_t> labels(c.docs.size(), -1);
  const int per = static_cast<int>(c.docs.size()) / c.themes;
  for (int t = 0; t < c.themes; ++t) {
    int offset = t * per;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      for (int i = 0; i < sizes[s]; ++i)
        labels[offset + i] =
            static_cast<std::int32_t>(t * sizes.size() + s);
      offset += sizes[s];
    }
  }
  return labels;
}

// largest principal angle (radians) between the column spaces of two
// orthonormal matrices
inline double subspace_angle(const DenseMat& u1, const DenseMat& u2) {
  Eigen::JacobiSVD<DenseMat> svd(u1.transpose() * u2);
  const double c = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(c);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           ("semblur_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace testing
