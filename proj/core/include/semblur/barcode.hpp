#pragma once

#include <cstdint>
#include <vector>

#include "semblur/cluster.hpp"
#include "semblur/matrix.hpp"

namespace semblur {

// One row per surviving cluster: the L1-normalized sum of the member
// feature rows. Rows are nonnegative and sum to 1.
struct BarcodeSet {
  DenseMat rows;                              // C x features
  std::vector<std::int32_t> source_cluster;   // row -> input cluster id
};

// Drops clusters with no members silently and clusters whose members sum to
// zero mass (their documents become unassigned in `compacted`). `compacted`
// relabels the input assignment into barcode-row ids.
struct BarcodeResult {
  BarcodeSet barcodes;
  std::vector<std::int32_t> compacted;  // labels in barcode-row space
};

BarcodeResult compute_barcodes(const SpMat& features,
                               const ClusterAssignment& assign);

enum class CorrelationMode {
  Cosine,      // dot / (||d|| * ||barcode||), the displayed formula
  DotProduct,  // raw dot product
};

struct ReassignOptions {
  CorrelationMode mode = CorrelationMode::Cosine;
  int threads = 1;
};

// Assigns every document to the barcode of maximal correlation; ties break
// to the lowest barcode index. Zero-feature documents keep their previous
// label. The score of document i against barcode j is accumulated over the
// document's stored entries in ascending column order, exactly matching a
// dense per-document loop.
std::vector<std::int32_t> reassign(const SpMat& features, const BarcodeSet& b,
                                   const std::vector<std::int32_t>& previous,
                                   const ReassignOptions& opts = {});

struct RevisionTrace {
  int iterations = 0;
  std::vector<int> moves_per_iteration;
  std::vector<std::int32_t> cluster_counts;
  bool converged = false;
};

struct RevisionOptions {
  int max_iterations = 100;
  ReassignOptions reassign;
};

struct RevisionResult {
  ClusterAssignment assign;
  BarcodeSet barcodes;
  RevisionTrace trace;
};

// Iterates (compute barcodes, reassign, dissolve clusters smaller than
// min_cluster_size) until a pass moves nothing and dissolves nothing.
// The cluster count never grows. Throws Collapse when every cluster
// dissolves; a repeated assignment state ends the run with converged=false.
RevisionResult revise(const SpMat& features, const ClusterAssignment& init,
                      Index min_cluster_size, const RevisionOptions& opts = {});

}  // namespace semblur
