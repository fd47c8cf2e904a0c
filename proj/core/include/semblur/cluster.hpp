#pragma once

#include <cstdint>
#include <vector>

#include "semblur/matrix.hpp"

namespace semblur {

inline constexpr std::int32_t kUnassigned = -1;

struct ClusterAssignment {
  std::vector<std::int32_t> labels;  // dense ids 0..count-1, or kUnassigned
  std::int32_t count = 0;
  DenseMat centers;  // count x dim mode/centroid coordinates

  std::vector<Index> members(std::int32_t cluster) const;
  std::vector<Index> sizes() const;
};

// Renumbers labels to dense 0..C-1 (order of first appearance), dropping
// empty ids. Unassigned entries stay unassigned.
ClusterAssignment compact_labels(const std::vector<std::int32_t>& labels,
                                 const DenseMat* points = nullptr);

enum class MeanShiftKernel { Gaussian, Flat };

struct MeanShiftOptions {
  double convergence_tol = 1e-7;  // stop shifting below this displacement
  int max_iterations = 300;
  MeanShiftKernel kernel = MeanShiftKernel::Gaussian;
  int threads = 1;
};

// Mode seeking over the fixed sample density; each point climbs its own
// trajectory, converged modes within bandwidth/2 are merged into one cluster.
ClusterAssignment mean_shift(const DenseMat& points, double bandwidth,
                             const MeanShiftOptions& opts = {});

// Single trajectory of the shift iteration from `start`; when `path` is
// given it receives every visited location including the start.
Vector shift_to_mode(const DenseMat& points, const Vector& start,
                     double bandwidth, const MeanShiftOptions& opts = {},
                     std::vector<Vector>* path = nullptr);

struct KMeansOptions {
  double convergence_tol = 1e-9;  // centroid movement threshold
  int max_iterations = 500;
  std::uint64_t seed = 1;
  // when set, receives the post-assignment inertia of every Lloyd iteration
  std::vector<double>* inertia_trace = nullptr;
};

// Lloyd iterations, Euclidean metric, seeded random distinct-point init.
// Empty clusters are reseeded from the point farthest from its centroid.
ClusterAssignment kmeans(const DenseMat& points, int k,
                         const KMeansOptions& opts = {});

// Extension beyond the core method: picks a bandwidth as the given quantile
// of sampled pairwise distances.
double estimate_bandwidth(const DenseMat& points, double quantile,
                          std::uint64_t seed = 1, int sample_cap = 2000);

}  // namespace semblur
