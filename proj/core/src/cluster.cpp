#include "semblur/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semblur/error.hpp"
#include "semblur/parallel.hpp"
#include "semblur/rng.hpp"

namespace semblur {

std::vector<Index> ClusterAssignment::members(std::int32_t cluster) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == cluster) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> ClusterAssignment::sizes() const {
  std::vector<Index> out(count, 0);
  for (auto l : labels)
    if (l >= 0) ++out[l];
  return out;
}

ClusterAssignment compact_labels(const std::vector<std::int32_t>& labels,
                                 const DenseMat* points) {
  ClusterAssignment out;
  out.labels.assign(labels.size(), kUnassigned);
  std::vector<std::int32_t> remap;
  std::int32_t max_id = -1;
  for (auto l : labels) max_id = std::max(max_id, l);
  remap.assign(static_cast<std::size_t>(max_id) + 1, kUnassigned);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (remap[labels[i]] == kUnassigned) remap[labels[i]] = out.count++;
    out.labels[i] = remap[labels[i]];
  }
  if (points && out.count > 0) {
    out.centers = DenseMat::Zero(out.count, points->cols());
    std::vector<Index> n(out.count, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (out.labels[i] >= 0) {
        out.centers.row(out.labels[i]) += points->row(static_cast<Index>(i));
        ++n[out.labels[i]];
      }
    for (std::int32_t c = 0; c < out.count; ++c)
      out.centers.row(c) /= static_cast<double>(n[c]);
  }
  return out;
}

Vector shift_to_mode(const DenseMat& points, const Vector& start,
                     double bandwidth, const MeanShiftOptions& opts,
                     std::vector<Vector>* path) {
  if (!(bandwidth > 0.0))
    throw Error(ErrorCode::ConfigError, "bandwidth must be positive");
  const Index n = points.rows();
  const double inv_2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double h2 = bandwidth * bandwidth;
  Vector x = start;
  if (path) path->push_back(x);
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vector next = Vector::Zero(points.cols());
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double d2 = (points.row(i).transpose() - x).squaredNorm();
      const double w = opts.kernel == MeanShiftKernel::Gaussian
                           ? std::exp(-d2 * inv_2h2)
                           : (d2 <= h2 ? 1.0 : 0.0);
      next += w * points.row(i).transpose();
      total += w;
    }
    if (total <= 0.0) break;  // flat kernel with empty window
    next /= total;
    const double shift = (next - x).norm();
    x = next;
    if (path) path->push_back(x);
    if (shift < opts.convergence_tol) break;
  }
  return x;
}

ClusterAssignment mean_shift(const DenseMat& points, double bandwidth,
                             const MeanShiftOptions& opts) {
  if (!(bandwidth > 0.0))
    throw Error(ErrorCode::ConfigError, "bandwidth must be positive");
  const Index n = points.rows();
  DenseMat modes(n, points.cols());

  parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t p) {
    modes.row(static_cast<Index>(p)) =
        shift_to_mode(points, points.row(static_cast<Index>(p)), bandwidth, opts);
  });

  // merge modes within bandwidth/2, first come first serve
  ClusterAssignment out;
  out.labels.assign(n, kUnassigned);
  std::vector<Vector> centers;
  const double merge_radius = bandwidth / 2.0;
  for (Index i = 0; i < n; ++i) {
    std::int32_t hit = kUnassigned;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if ((modes.row(i).transpose() - centers[c]).norm() < merge_radius) {
        hit = static_cast<std::int32_t>(c);
        break;
      }
    }
    if (hit == kUnassigned) {
      centers.push_back(modes.row(i));
      hit = static_cast<std::int32_t>(centers.size() - 1);
    }
    out.labels[i] = hit;
  }
  out.count = static_cast<std::int32_t>(centers.size());
  out.centers.resize(out.count, points.cols());
  for (std::int32_t c = 0; c < out.count; ++c) out.centers.row(c) = centers[c];
  return out;
}

ClusterAssignment kmeans(const DenseMat& points, int k,
                         const KMeansOptions& opts) {
  const Index n = points.rows();
  if (k < 1 || k > n)
    throw Error(ErrorCode::ConfigError, "k must be in [1, point count]");
  Rng rng(opts.seed);

  // seeded partial Fisher-Yates for distinct starting points
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < static_cast<Index>(k); ++i) {
    const Index j = i + static_cast<Index>(rng.uniform_int(n - i));
    std::swap(order[i], order[j]);
  }
  DenseMat centers(k, points.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = points.row(order[c]);

  std::vector<std::int32_t> labels(n, 0);
  std::vector<double> dist_to_center(n, 0.0);
  for (int it = 0; it < opts.max_iterations; ++it) {
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::int32_t best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      labels[i] = best_c;
      dist_to_center[i] = best;
    }
    if (opts.inertia_trace)
      opts.inertia_trace->push_back(
          std::accumulate(dist_to_center.begin(), dist_to_center.end(), 0.0));

    DenseMat next = DenseMat::Zero(k, points.cols());
    std::vector<Index> sizes(k, 0);
    for (Index i = 0; i < n; ++i) {
      next.row(labels[i]) += points.row(i);
      ++sizes[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        next.row(c) /= static_cast<double>(sizes[c]);
      } else {
        // reseed an empty cluster from the farthest point
        Index far = 0;
        for (Index i = 1; i < n; ++i)
          if (dist_to_center[i] > dist_to_center[far]) far = i;
        next.row(c) = points.row(far);
        dist_to_center[far] = 0.0;
      }
    }
    const double movement = (next - centers).rowwise().norm().maxCoeff();
    centers = next;
    if (movement < opts.convergence_tol) break;
  }

  for (Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::int32_t best_c = 0;
    for (int c = 0; c < k; ++c) {
      const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    labels[i] = best_c;
  }
  ClusterAssignment out = compact_labels(labels, &points);
  return out;
}

double estimate_bandwidth(const DenseMat& points, double quantile,
                          std::uint64_t seed, int sample_cap) {
  if (!(quantile > 0.0 && quantile < 1.0))
    throw Error(ErrorCode::ConfigError, "quantile must be in (0, 1)");
  const Index n = points.rows();
  if (n < 2) throw Error(ErrorCode::ConfigError, "need at least two points");
  Rng rng(seed);
  std::vector<double> dists;
  const Index pairs = std::min<Index>(sample_cap, n * (n - 1) / 2);
  dists.reserve(pairs);
  if (n * (n - 1) / 2 <= pairs) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        dists.push_back((points.row(i) - points.row(j)).norm());
  } else {
    while (static_cast<Index>(dists.size()) < pairs) {
      const Index i = static_cast<Index>(rng.uniform_int(n));
      const Index j = static_cast<Index>(rng.uniform_int(n));
      if (i != j) dists.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  std::sort(dists.begin(), dists.end());
  const double pos = quantile * static_cast<double>(dists.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, dists.size() - 1);
  return dists[lo] + (pos - std::floor(pos)) * (dists[hi] - dists[lo]);
}

}  // namespace semblur
