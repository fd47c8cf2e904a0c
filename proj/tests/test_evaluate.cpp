#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "semblur/error.hpp"
#include "semblur/evaluate.hpp"

using namespace semblur;

TEST_SUITE_BEGIN("evaluate");

namespace {

std::vector<std::optional<std::string>> opt_labels(
    const std::vector<std::string>& raw) {
  std::vector<std::optional<std::string>> out;
  for (const auto& s : raw)
    out.push_back(s.empty() ? std::nullopt : std::optional<std::string>(s));
  return out;
}

}  // namespace

TEST_CASE("a perfect split yields a diagonal confusion matrix") {
  auto assign = compact_labels({0, 0, 1, 1});
  auto cm = confusion(assign, opt_labels({"a", "a", "b", "b"}));
  CHECK(cm.counts(0, 0) == 2);
  CHECK(cm.counts(1, 1) == 2);
  CHECK(cm.counts(0, 1) == 0);
  CHECK(cm.counts(1, 0) == 0);
  CHECK(cm.excluded == 0);
}

TEST_CASE("a single cluster tallies class counts in one row") {
  auto assign = compact_labels({0, 0, 0, 0});
  auto cm = confusion(assign, opt_labels({"x", "x", "x", "y"}));
  REQUIRE(cm.counts.rows() == 1);
  CHECK(cm.counts(0, 0) == 3);
  CHECK(cm.counts(0, 1) == 1);
}

TEST_CASE("confusion matches a brute-force tally on random data") {
  testing::Rng rng(5);
  const int docs = 200;
  std::vector<std::int32_t> labels(docs);
  std::vector<std::string> classes(docs);
  for (int i = 0; i < docs; ++i) {
    labels[i] = static_cast<std::int32_t>(rng.uniform_int(6));
    classes[i] = "c" + std::to_string(rng.uniform_int(4));
  }
  auto assign = compact_labels(labels);
  auto cm = confusion(assign, opt_labels(classes));

  std::map<std::pair<std::int32_t, std::string>, std::int64_t> oracle;
  for (int i = 0; i < docs; ++i) ++oracle[{assign.labels[i], classes[i]}];
  for (Index k = 0; k < cm.counts.rows(); ++k)
    for (Index j = 0; j < cm.counts.cols(); ++j) {
      const auto key = std::make_pair(static_cast<std::int32_t>(k),
                                      cm.classes[j]);
      const auto it = oracle.find(key);
      CHECK(cm.counts(k, j) == (it == oracle.end() ? 0 : it->second));
    }
  CHECK(cm.total() == docs);
}

TEST_CASE("unassigned and unlabeled documents are excluded but counted") {
  auto assign = compact_labels({0, -1, 0, 1});
  auto cm = confusion(assign, opt_labels({"a", "a", "", "b"}));
  CHECK(cm.total() == 2);
  CHECK(cm.excluded == 2);
}

TEST_CASE("confusion requires at least one countable document") {
  auto assign = compact_labels({-1, -1});
  CHECK_THROWS_AS(confusion(assign, opt_labels({"a", "b"})), Error);
}

TEST_CASE("purity follows the majority-class formula") {
  // clusters {3 class-a + 1 class-b} and {4 class-b}: (3+4)/8
  auto assign = compact_labels({0, 0, 0, 0, 1, 1, 1, 1});
  auto cm = confusion(assign,
                      opt_labels({"a", "a", "a", "b", "b", "b", "b", "b"}));
  auto rep = purity(cm);
  CHECK(rep.purity == doctest::Approx(0.875));
  CHECK(rep.per_cluster.size() == 2);
  CHECK(rep.per_cluster[0].majority_class == "a");
  CHECK(rep.per_cluster[0].fraction == doctest::Approx(0.75));
}

TEST_CASE("perfect clustering has purity one") {
  auto assign = compact_labels({0, 1, 2});
  auto cm = confusion(assign, opt_labels({"x", "y", "z"}));
  CHECK(purity(cm).purity == 1.0);
}

TEST_CASE("inclusive purity counts excluded labeled documents as wrong") {
  auto assign = compact_labels({0, 0, -1, -1});
  auto cm = confusion(assign, opt_labels({"a", "a", "a", "a"}));
  auto rep = purity(cm);
  CHECK(rep.purity == 1.0);
  CHECK(rep.purity_inclusive == doctest::Approx(0.5));
}

TEST_CASE("purity is invariant under cluster and class relabeling") {
  testing::Rng rng(7);
  std::vector<std::int32_t> labels(120);
  std::vector<std::string> classes(120);
  for (int i = 0; i < 120; ++i) {
    labels[i] = static_cast<std::int32_t>(rng.uniform_int(5));
    classes[i] = "c" + std::to_string(rng.uniform_int(3));
  }
  auto base = purity(confusion(compact_labels(labels), opt_labels(classes)));

  // permute cluster ids and rename classes
  std::vector<std::int32_t> permuted(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    permuted[i] = (labels[i] + 2) % 5;
  std::vector<std::string> renamed(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i)
    renamed[i] = "zz" + classes[i];
  auto moved =
      purity(confusion(compact_labels(permuted), opt_labels(renamed)));
  CHECK(base.purity == doctest::Approx(moved.purity).epsilon(1e-15));
}

TEST_CASE("heatmap bands rows by cluster and keeps a bijective row order") {
  DenseMat f(6, 4);
  f << 1, 0, 0, 0,
       0, 2, 0, 0,
       3, 0, 0, 0,
       0, 0, 4, 0,
       0, 0, 0, 5,
       6, 0, 0, 0;
  // compact_labels renumbers by first appearance: doc0's cluster becomes 0
  auto assign = compact_labels({1, 0, 1, 0, -1, 0});
  auto h = barcode_heatmap(testing::from_dense(f), assign, {});
  REQUIRE(h.row_order.size() == 6);
  // band for cluster 0 = docs {0, 2}, then cluster 1 = {1, 3, 5}, unassigned last
  CHECK(h.row_order == std::vector<Index>{0, 2, 1, 3, 5, 4});
  // bijection on document indices
  std::vector<Index> sorted = h.row_order;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<Index>{0, 1, 2, 3, 4, 5});
  CHECK(h.width == 4);
  CHECK(h.height == 6);
}

TEST_CASE("heatmap with top_n equal to the feature count keeps all columns") {
  testing::Rng rng(11);
  SpMat f = testing::random_sparse(rng, 10, 8, 0.4);
  HeatmapOptions opts;
  opts.top_n = 8;
  auto h = barcode_heatmap(f, compact_labels(std::vector<std::int32_t>(10, 0)),
                           opts);
  CHECK(h.width == 8);
  std::vector<Index> sorted = h.column_order;
  std::sort(sorted.begin(), sorted.end());
  for (Index j = 0; j < 8; ++j) CHECK(sorted[j] == j);
}

TEST_CASE("heatmap selects the heaviest columns") {
  DenseMat f(3, 4);
  f << 1, 0, 5, 0,
       1, 0, 5, 0,
       1, 1, 5, 0;  // masses 3, 1, 15, 0
  HeatmapOptions opts;
  opts.top_n = 2;
  auto h = barcode_heatmap(testing::from_dense(f),
                           compact_labels({0, 0, 0}), opts);
  CHECK(h.column_order == std::vector<Index>{2, 0});
}

TEST_CASE("heatmap pixels live in the 8-bit range with max at 255") {
  testing::Rng rng(13);
  SpMat f = testing::random_sparse(rng, 12, 9, 0.5);
  auto h = barcode_heatmap(f, compact_labels(std::vector<std::int32_t>(12, 0)),
                           {});
  std::uint8_t max_pixel = 0;
  for (auto p : h.pixels) max_pixel = std::max(max_pixel, p);
  CHECK(max_pixel == 255);
}

TEST_CASE("heatmap pgm file round-trips through the writer") {
  testing::TempDir dir("pgm");
  DenseMat f(2, 2);
  f << 1, 0, 0, 1;
  auto h = barcode_heatmap(testing::from_dense(f), compact_labels({0, 1}), {});
  write_heatmap_pgm(dir.path / "x.pgm", h);
  std::ifstream in(dir.path / "x.pgm", std::ios::binary);
  std::string magic;
  in >> magic;
  CHECK(magic == "P5");
  int w, hh, maxv;
  in >> w >> hh >> maxv;
  CHECK(w == 2);
  CHECK(hh == 2);
  CHECK(maxv == 255);
}

TEST_SUITE_END();
