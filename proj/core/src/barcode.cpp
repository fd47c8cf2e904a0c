#include "semblur/barcode.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "semblur/error.hpp"
#include "semblur/io.hpp"
#include "semblur/parallel.hpp"

namespace semblur {

BarcodeResult compute_barcodes(const SpMat& features,
                               const ClusterAssignment& assign) {
  if (static_cast<Index>(assign.labels.size()) != features.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "assignment length does not match feature rows");

  const std::int32_t c_in = assign.count;
  DenseMat sums = DenseMat::Zero(c_in, features.cols());
  std::vector<Index> members(c_in, 0);
  for (Index i = 0; i < features.rows(); ++i) {
    const auto l = assign.labels[i];
    if (l < 0) continue;
    ++members[l];
    for (SpMat::InnerIterator it(features, i); it; ++it)
      sums(l, it.col()) += it.value();
  }

  BarcodeResult res;
  std::vector<std::int32_t> remap(c_in, kUnassigned);
  std::vector<Index> kept;
  for (std::int32_t c = 0; c < c_in; ++c) {
    if (members[c] == 0) continue;  // empty cluster: dropped silently
    const double mass = sums.row(c).cwiseAbs().sum();
    if (mass <= 0.0) continue;  // zero mass: dropped, members unassigned
    remap[c] = static_cast<std::int32_t>(kept.size());
    kept.push_back(c);
    sums.row(c) /= mass;
  }
  if (kept.empty())
    throw Error(ErrorCode::EmptyCluster, "no cluster has nonzero mass");

  res.barcodes.rows.resize(static_cast<Index>(kept.size()), features.cols());
  res.barcodes.source_cluster.resize(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    res.barcodes.rows.row(static_cast<Index>(r)) = sums.row(kept[r]);
    res.barcodes.source_cluster[r] = static_cast<std::int32_t>(kept[r]);
  }
  res.compacted.resize(assign.labels.size());
  for (std::size_t i = 0; i < assign.labels.size(); ++i) {
    const auto l = assign.labels[i];
    res.compacted[i] = l < 0 ? kUnassigned : remap[l];
  }
  return res;
}

namespace {

// score of one sparse row against every barcode, entries accumulated in
// ascending column order so a dense reference loop reproduces it exactly
void score_row(const SpMat& features, Index row, const DenseMat& barcodes,
               const Vector& barcode_norms, CorrelationMode mode,
               double row_norm, std::vector<double>& out) {
  const auto c = barcodes.rows();
  out.assign(c, 0.0);
  for (SpMat::InnerIterator it(features, row); it; ++it)
    for (Index j = 0; j < c; ++j) out[j] += it.value() * barcodes(j, it.col());
  if (mode == CorrelationMode::Cosine)
    for (Index j = 0; j < c; ++j) out[j] /= row_norm * barcode_norms[j];
}

}  // namespace

std::vector<std::int32_t> reassign(const SpMat& features, const BarcodeSet& b,
                                   const std::vector<std::int32_t>& previous,
                                   const ReassignOptions& opts) {
  if (b.rows.rows() == 0)
    throw Error(ErrorCode::EmptyCluster, "no barcodes to assign against");
  if (b.rows.cols() != features.cols())
    throw Error(ErrorCode::DimensionMismatch,
                "barcode width does not match feature columns");
  const Index n = features.rows();
  Vector barcode_norms = b.rows.rowwise().norm();
  Vector row_norms(n);
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (SpMat::InnerIterator it(features, i); it; ++it)
      s += it.value() * it.value();
    row_norms[i] = std::sqrt(s);
  }

  std::vector<std::int32_t> labels(n, kUnassigned);
  parallel_for(static_cast<std::size_t>(n), opts.threads, [&](std::size_t i) {
    const Index row = static_cast<Index>(i);
    if (row_norms[row] == 0.0) {
      labels[row] = previous.empty() ? kUnassigned : previous[row];
      return;
    }
    std::vector<double> scores;
    score_row(features, row, b.rows, barcode_norms, opts.mode, row_norms[row],
              scores);
    std::int32_t best = 0;
    for (std::size_t j = 1; j < scores.size(); ++j)
      if (scores[j] > scores[best]) best = static_cast<std::int32_t>(j);
    labels[row] = best;
  });
  return labels;
}

RevisionResult revise(const SpMat& features, const ClusterAssignment& init,
                      Index min_cluster_size, const RevisionOptions& opts) {
  if (init.count < 1)
    throw Error(ErrorCode::EmptyCluster, "revision needs at least one cluster");
  if (min_cluster_size < 1)
    throw Error(ErrorCode::ConfigError, "min_cluster_size must be >= 1");

  ClusterAssignment current = compact_labels(init.labels);
  RevisionResult out;
  std::unordered_set<std::uint64_t> seen_states;

  RevisionResult best;
  int best_moves = -1;

  for (int pass = 0; pass < opts.max_iterations; ++pass) {
    BarcodeResult bc = compute_barcodes(features, current);
    std::vector<std::int32_t> labels =
        reassign(features, bc.barcodes, bc.compacted, opts.reassign);

    int moves = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] != bc.compacted[i]) ++moves;

    auto c_now = static_cast<std::int32_t>(bc.barcodes.rows.rows());
    std::vector<Index> sizes(c_now, 0);
    for (auto l : labels)
      if (l >= 0) ++sizes[l];

    // dissolve undersized clusters; their documents rejoin the survivors
    std::vector<std::int32_t> survivors;
    for (std::int32_t c = 0; c < c_now; ++c)
      if (sizes[c] >= min_cluster_size) survivors.push_back(c);
    const int dissolved = static_cast<int>(c_now - survivors.size());
    if (dissolved > 0) {
      if (survivors.empty())
        throw Error(ErrorCode::Collapse,
                    "every cluster fell below the minimum size");
      BarcodeSet surviving;
      surviving.rows.resize(static_cast<Index>(survivors.size()),
                            bc.barcodes.rows.cols());
      for (std::size_t r = 0; r < survivors.size(); ++r)
        surviving.rows.row(static_cast<Index>(r)) =
            bc.barcodes.rows.row(survivors[r]);
      Vector survivor_norms = surviving.rows.rowwise().norm();

      std::vector<std::int32_t> remap(c_now, kUnassigned);
      for (std::size_t r = 0; r < survivors.size(); ++r)
        remap[survivors[r]] = static_cast<std::int32_t>(r);

      for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto l = labels[i];
        if (l < 0) continue;
        if (remap[l] != kUnassigned) {
          labels[i] = remap[l];
          continue;
        }
        // member of a dissolved cluster: re-run the correlation argmax
        double row_norm = 0.0;
        for (SpMat::InnerIterator it(features, static_cast<Index>(i)); it; ++it)
          row_norm += it.value() * it.value();
        row_norm = std::sqrt(row_norm);
        if (row_norm == 0.0) {
          labels[i] = kUnassigned;
          ++moves;
          continue;
        }
        std::vector<double> scores;
        score_row(features, static_cast<Index>(i), surviving.rows,
                  survivor_norms, opts.reassign.mode, row_norm, scores);
        std::int32_t bestc = 0;
        for (std::size_t j = 1; j < scores.size(); ++j)
          if (scores[j] > scores[bestc]) bestc = static_cast<std::int32_t>(j);
        labels[i] = bestc;
        ++moves;
      }
    }

    current = compact_labels(labels);
    out.trace.moves_per_iteration.push_back(moves);
    out.trace.cluster_counts.push_back(current.count);
    out.trace.iterations = pass + 1;

    if (moves == 0 && dissolved == 0) {
      out.trace.converged = true;
      break;
    }
    if (best_moves < 0 || moves < best_moves) {
      best_moves = moves;
      best.assign = current;
    }
    const std::uint64_t state = fnv1a64(
        current.labels.data(), current.labels.size() * sizeof(std::int32_t));
    if (!seen_states.insert(state).second) {
      // assignment state repeated without converging: keep the best pass
      current = best.assign;
      out.trace.converged = false;
      break;
    }
  }

  BarcodeResult final_bc = compute_barcodes(features, current);
  out.assign = compact_labels(final_bc.compacted);
  out.barcodes = final_bc.barcodes;
  return out;
}

}  // namespace semblur
