#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semblur/cluster.hpp"
#include "semblur/matrix.hpp"

namespace semblur {

struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::vector<std::int32_t> cluster_ids;  // row metadata
  std::vector<std::string> classes;       // column metadata, sorted
  std::int64_t excluded = 0;  // unlabeled or unassigned documents

  std::int64_t total() const { return counts.sum(); }
};

// counts(k, j) = documents in cluster k with ground-truth class j. Documents
// without a label or without an assignment are excluded (tallied separately).
// Throws NoLabeledDocs when nothing is countable.
ConfusionMatrix confusion(const ClusterAssignment& assign,
                          const std::vector<std::optional<std::string>>& labels);

struct ClusterMajority {
  std::int32_t cluster;
  std::string majority_class;
  double fraction;  // majority count / cluster total
};

struct PurityReport {
  double purity = 0.0;            // over counted documents
  double purity_inclusive = 0.0;  // excluded labeled docs count as wrong
  std::vector<ClusterMajority> per_cluster;
  std::string stage;  // e.g. "initial", "revised"
};

PurityReport purity(const ConfusionMatrix& cm, const std::string& stage = "");

struct HeatmapOptions {
  Index top_n = 7000;     // clamped to the feature count
  bool log_scale = true;  // log1p scaling before 8-bit quantization
};

struct Heatmap {
  std::vector<std::uint8_t> pixels;  // row-major, height x width
  int width = 0;
  int height = 0;
  std::vector<Index> row_order;      // document permutation, cluster bands
  std::vector<Index> column_order;   // selected features, heaviest first
};

// Rows permuted into cluster bands (unassigned last), columns are the top_n
// features by global column mass.
Heatmap barcode_heatmap(const SpMat& features, const ClusterAssignment& assign,
                        const HeatmapOptions& opts = {});

void write_heatmap_pgm(const std::filesystem::path& path, const Heatmap& h);

}  // namespace semblur
