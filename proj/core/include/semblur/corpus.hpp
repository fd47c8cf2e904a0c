#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "semblur/matrix.hpp"

namespace semblur {

struct Document {
  std::string id;
  std::string text;                  // title + abstract, one blob
  std::optional<std::string> label;  // ground-truth class, if known
};

// Term list in first-occurrence order, so column indices are reproducible
// for a given corpus regardless of hashing internals.
struct Vocabulary {
  std::vector<std::string> terms;
  std::vector<Index> doc_frequency;

  Index size() const { return static_cast<Index>(terms.size()); }
  // -1 when the term is unknown
  Index index_of(const std::string& term) const;
};

using StopwordSet = std::unordered_set<std::string>;

// Lowercases, splits on any non-alphanumeric byte, drops stopwords and
// tokens shorter than 2 characters. Bytes outside ASCII act as separators.
std::vector<std::string> tokenize(const std::string& text,
                                  const StopwordSet& stopwords);

struct CorpusMatrix {
  Vocabulary vocab;
  SpMat occurrence;  // binary: (i,j) = 1 iff term j occurs in document i
};

// Throws AllDocsEmpty when no document yields a token.
CorpusMatrix build_occurrence(const std::vector<Document>& docs,
                              const StopwordSet& stopwords);

struct FilterResult {
  SpMat matrix;
  std::vector<Index> kept;     // original column indices, ascending
  std::vector<Index> removed;  // complement, ascending
};

// Drops columns whose column sum is <= min_df. On a binary occurrence matrix
// the column sum is the document frequency; on blurred matrices the same
// threshold applies to the weighted sums.
FilterResult high_pass_filter(const SpMat& m, double min_df);

// Drops columns whose sum strictly exceeds the `quantile`-th empirical
// quantile (linear interpolation) of all column sums. quantile 1.0 keeps
// every column.
FilterResult low_pass_filter(const SpMat& m, double quantile);

Vocabulary select_vocab(const Vocabulary& v, const std::vector<Index>& kept);

// one JSON object per line: {"id": ..., "text": ..., "label": optional}
std::vector<Document> load_jsonl_corpus(const std::filesystem::path& path);
// directory of .txt files (doc id = stem) plus optional labels CSV
// with "filename,label" rows
std::vector<Document> load_text_dir_corpus(
    const std::filesystem::path& dir,
    const std::optional<std::filesystem::path>& labels_csv);

StopwordSet load_stopwords(const std::filesystem::path& path);

}  // namespace semblur
