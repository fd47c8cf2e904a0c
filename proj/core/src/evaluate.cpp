#include "semblur/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "semblur/error.hpp"
#include "semblur/io.hpp"

namespace semblur {

ConfusionMatrix confusion(
    const ClusterAssignment& assign,
    const std::vector<std::optional<std::string>>& labels) {
  if (assign.labels.size() != labels.size())
    throw Error(ErrorCode::DimensionMismatch,
                "label count does not match assignment length");

  std::map<std::string, Index> class_index;  // sorted class order
  for (const auto& l : labels)
    if (l) class_index.emplace(*l, 0);
  Index next = 0;
  for (auto& [name, idx] : class_index) idx = next++;

  ConfusionMatrix cm;
  cm.classes.reserve(class_index.size());
  for (const auto& [name, idx] : class_index) cm.classes.push_back(name);
  cm.cluster_ids.resize(assign.count);
  for (std::int32_t c = 0; c < assign.count; ++c) cm.cluster_ids[c] = c;
  cm.counts.setZero(assign.count, static_cast<Index>(class_index.size()));

  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto cluster = assign.labels[i];
    if (cluster < 0 || !labels[i]) {
      ++cm.excluded;
      continue;
    }
    ++cm.counts(cluster, class_index.at(*labels[i]));
  }
  if (cm.total() == 0)
    throw Error(ErrorCode::NoLabeledDocs,
                "no document has both an assignment and a label");
  return cm;
}

PurityReport purity(const ConfusionMatrix& cm, const std::string& stage) {
  const std::int64_t total = cm.total();
  if (total == 0)
    throw Error(ErrorCode::NoLabeledDocs, "confusion matrix is empty");

  PurityReport report;
  report.stage = stage;
  std::int64_t majority_sum = 0;
  for (Index k = 0; k < cm.counts.rows(); ++k) {
    std::int64_t row_total = 0, row_max = 0;
    Index argmax = 0;
    for (Index j = 0; j < cm.counts.cols(); ++j) {
      row_total += cm.counts(k, j);
      if (cm.counts(k, j) > row_max) {
        row_max = cm.counts(k, j);
        argmax = j;
      }
    }
    if (row_total == 0) continue;
    majority_sum += row_max;
    report.per_cluster.push_back({cm.cluster_ids[k], cm.classes[argmax],
                                  static_cast<double>(row_max) /
                                      static_cast<double>(row_total)});
  }
  report.purity =
      static_cast<double>(majority_sum) / static_cast<double>(total);
  report.purity_inclusive = static_cast<double>(majority_sum) /
                            static_cast<double>(total + cm.excluded);
  return report;
}

Heatmap barcode_heatmap(const SpMat& features, const ClusterAssignment& assign,
                        const HeatmapOptions& opts) {
  if (static_cast<Index>(assign.labels.size()) != features.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "assignment length does not match feature rows");
  const Index top_n = std::min(opts.top_n, features.cols());
  if (top_n < 1)
    throw Error(ErrorCode::ConfigError, "top_n must be >= 1");

  Heatmap h;
  // stable sort by cluster, unassigned at the end; preserves doc order
  // within each band
  h.row_order.resize(features.rows());
  for (Index i = 0; i < features.rows(); ++i) h.row_order[i] = i;
  std::stable_sort(h.row_order.begin(), h.row_order.end(),
                   [&](Index a, Index b) {
                     const auto la = assign.labels[a], lb = assign.labels[b];
                     const auto ka = la < 0 ? std::numeric_limits<std::int32_t>::max() : la;
                     const auto kb = lb < 0 ? std::numeric_limits<std::int32_t>::max() : lb;
                     return ka < kb;
                   });

  // heaviest columns first, index ascending on ties
  const Vector mass = col_sums(features);
  std::vector<Index> cols(features.cols());
  for (Index j = 0; j < features.cols(); ++j) cols[j] = j;
  std::stable_sort(cols.begin(), cols.end(), [&](Index a, Index b) {
    return mass[a] > mass[b];
  });
  cols.resize(top_n);
  h.column_order = cols;
  std::vector<Index> col_pos(features.cols(), -1);
  for (Index p = 0; p < top_n; ++p) col_pos[cols[p]] = p;

  DenseMat img = DenseMat::Zero(features.rows(), top_n);
  for (Index i = 0; i < features.rows(); ++i)
    for (SpMat::InnerIterator it(features, i); it; ++it)
      if (col_pos[it.col()] >= 0) img(i, col_pos[it.col()]) = it.value();

  double vmax = 0.0;
  for (Index i = 0; i < img.rows(); ++i)
    vmax = std::max(vmax, img.row(i).maxCoeff());

  h.width = static_cast<int>(top_n);
  h.height = static_cast<int>(features.rows());
  h.pixels.assign(static_cast<std::size_t>(h.width) * h.height, 0);
  if (vmax > 0.0) {
    const double denom = opts.log_scale ? std::log1p(vmax) : vmax;
    for (Index r = 0; r < features.rows(); ++r) {
      const Index src = h.row_order[r];
      for (Index c = 0; c < top_n; ++c) {
        const double v = img(src, c);
        if (v <= 0.0) continue;
        const double scaled =
            opts.log_scale ? std::log1p(v) / denom : v / denom;
        h.pixels[static_cast<std::size_t>(r) * h.width + c] =
            static_cast<std::uint8_t>(std::lround(255.0 * std::min(1.0, scaled)));
      }
    }
  }
  return h;
}

void write_heatmap_pgm(const std::filesystem::path& path, const Heatmap& h) {
  write_pgm(path, h.pixels, h.width, h.height);
}

}  // namespace semblur
