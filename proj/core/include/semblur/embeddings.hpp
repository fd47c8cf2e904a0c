#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semblur/corpus.hpp"
#include "semblur/matrix.hpp"

namespace semblur {

// Dense vectors for the subset of the vocabulary present in the embedding
// file. `row_of[t]` maps a vocabulary index to a row of `vectors` (-1 when
// the term has no pretrained vector).
struct EmbeddingTable {
  int dim = 0;
  DenseMat vectors;            // covered_count x dim
  std::vector<Index> covered;  // vocabulary indices, ascending
  std::vector<Index> row_of;   // vocab size; -1 = uncovered

  bool is_covered(Index term) const { return row_of[term] >= 0; }
  Index covered_count() const { return static_cast<Index>(covered.size()); }
};

enum class RowNormalization {
  L1Abs,  // divide by sum of absolute values (default; safe for signed vectors)
  Sum,    // divide by the plain entry sum
};

// Text format: optional "count dim" header, then one term per line followed
// by `dim` decimal components. Only vocabulary terms are kept; an exact
// match wins over a lowercased one, first occurrence wins within each.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const Vocabulary& vocab);

// Scales every vector to unit L1 mass. Throws ZeroVector on a zero vector.
EmbeddingTable row_stochastic(EmbeddingTable table,
                              RowNormalization norm = RowNormalization::L1Abs);

struct Neighborhood {
  std::vector<Index> terms;      // vocab indices; self first, then ascending distance
  std::vector<double> distances; // matching, nondecreasing; distances[0] == 0
  double sigma = 0.0;            // max distance in the neighborhood
};

// Exact k-nearest-neighbor index over the covered terms. Neighborhoods are
// self-inclusive; ties in distance break by ascending vocabulary index.
class NeighborhoodIndex {
 public:
  // threads: worker cap for construction (<=0 picks hardware concurrency)
  NeighborhoodIndex(const EmbeddingTable& table, int k, int threads = 1);

  // Throws UncoveredTerm for terms without a vector.
  const Neighborhood& neighborhood(Index term) const;
  int k() const { return k_; }
  const std::vector<Index>& covered_terms() const { return covered_; }
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
  int k_;
  std::vector<Index> covered_;
  std::vector<Neighborhood> by_term_;  // indexed by vocab index; empty if uncovered
};

// CSV rows "term,covered" for every vocabulary term
void write_coverage_report(const std::filesystem::path& path,
                           const Vocabulary& vocab, const EmbeddingTable& table);

}  // namespace semblur
