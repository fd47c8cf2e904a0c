#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "semblur/barcode.hpp"
#include "semblur/cluster.hpp"
#include "semblur/embeddings.hpp"
#include "semblur/matrix.hpp"

namespace semblur {

enum class Affinity { DT, DSE };
enum class ClustererKind { MeanShift, KMeans };

struct PipelineConfig {
  // corpus: either a JSONL file or a directory of .txt files (+ labels CSV)
  std::filesystem::path corpus_path;
  std::filesystem::path corpus_dir;
  std::optional<std::filesystem::path> labels_csv;
  std::optional<std::filesystem::path> stopwords_path;
  std::optional<std::filesystem::path> embeddings_path;

  Affinity affinity = Affinity::DT;
  int blur_k = 4;
  double min_df = 1.0;
  double low_pass_quantile = 0.95;
  int embedding_dim = 5;  // spectral coordinates per document

  ClustererKind clusterer = ClustererKind::MeanShift;
  double bandwidth = 0.0;
  std::optional<double> bandwidth_quantile;  // extension: data-driven bandwidth
  int kmeans_k = 8;

  Index min_cluster_size = 5;
  int max_revision_iterations = 100;
  CorrelationMode correlation = CorrelationMode::Cosine;
  RowNormalization embedding_norm = RowNormalization::L1Abs;
  bool skip_leading_vector = true;

  std::uint64_t seed = 42;
  std::filesystem::path output_dir;
  int threads = 1;
  Index heatmap_top_n = 7000;
  bool write_heatmaps = true;
  bool export_matrices = true;

  nlohmann::json to_json() const;
};

// Parses and validates a JSON config; unknown keys are rejected so typos
// fail loudly. The SEMBLUR_OUTPUT_DIR environment variable overrides
// output_dir. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
void validate_config(const PipelineConfig& config);

enum class Stage { Ingest, Blur, Filter, Embed, Cluster, Revise, Evaluate };
const char* stage_name(Stage s);

struct RunManifest {
  nlohmann::json data;

  std::string outputs_digest() const;
  static RunManifest load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Executes ingest -> (blur) -> filter -> embed -> cluster -> revise ->
// evaluate, persisting every intermediate artifact under output_dir and
// writing manifest.json. `from` resumes a previous run in the same
// output_dir, reloading the artifacts earlier stages produced.
RunManifest run_pipeline(const PipelineConfig& config,
                         Stage from = Stage::Ingest);

struct ComparisonReport {
  nlohmann::json data;
  std::string text;  // rendered delta table
  std::string csv;
};

// Deltas (b - a) of cluster counts and purity, per stage. Throws
// CorpusMismatch when the manifests reference different corpora.
ComparisonReport compare_manifests(const RunManifest& a, const RunManifest& b);

// Standalone evaluation of an assignments CSV against a labels CSV;
// returns the metrics JSON emitted by the `eval` subcommand.
nlohmann::json evaluate_files(const std::filesystem::path& assignments_csv,
                              const std::filesystem::path& labels_csv);

}  // namespace semblur
