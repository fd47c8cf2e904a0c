#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "semblur/embeddings.hpp"
#include "semblur/error.hpp"

using namespace semblur;

TEST_SUITE_BEGIN("embeddings");

namespace {

Vocabulary vocab_of(const std::vector<std::string>& terms) {
  Vocabulary v;
  v.terms = terms;
  v.doc_frequency.assign(terms.size(), 1);
  return v;
}

}  // namespace

TEST_CASE("load_embeddings keeps only covered vocabulary terms") {
  testing::TempDir dir("emb1");
  std::ofstream(dir.path / "v.vec") << "cat 1 0\ndog 0 1\nfish 1 1\n";
  auto table = load_embeddings(dir.path / "v.vec", vocab_of({"cat", "dog", "zzz"}));
  CHECK(table.dim == 2);
  CHECK(table.covered == std::vector<Index>{0, 1});
  CHECK_FALSE(table.is_covered(2));
  CHECK(table.vectors(0, 0) == 1.0);
  CHECK(table.vectors(1, 1) == 1.0);
}

TEST_CASE("load_embeddings understands a count/dim header") {
  testing::TempDir dir("emb2");
  std::ofstream(dir.path / "v.vec") << "2 3\ncat 1 2 3\ndog 4 5 6\n";
  auto table = load_embeddings(dir.path / "v.vec", vocab_of({"cat", "dog"}));
  CHECK(table.dim == 3);
  CHECK(table.covered_count() == 2);
}

TEST_CASE("load_embeddings handles 300-dimension vectors") {
  testing::TempDir dir("emb3");
  std::ofstream out(dir.path / "v.vec");
  out << "cat";
  for (int d = 0; d < 300; ++d) out << ' ' << (d * 0.01);
  out << '\n';
  out.close();
  auto table = load_embeddings(dir.path / "v.vec", vocab_of({"cat"}));
  CHECK(table.dim == 300);
}

TEST_CASE("load_embeddings reports malformed component counts") {
  testing::TempDir dir("emb4");
  std::ofstream(dir.path / "v.vec") << "cat 1 2\ndog 3\n";
  CHECK_THROWS_AS(load_embeddings(dir.path / "v.vec", vocab_of({"cat", "dog"})),
                  Error);
}

TEST_CASE("load_embeddings requires a nonempty intersection") {
  testing::TempDir dir("emb5");
  std::ofstream(dir.path / "v.vec") << "cat 1 2\n";
  CHECK_THROWS_AS(load_embeddings(dir.path / "v.vec", vocab_of({"zzz"})), Error);
}

TEST_CASE("load_embeddings falls back to case-folded matches") {
  testing::TempDir dir("emb6");
  std::ofstream(dir.path / "v.vec") << "Cat 1 2\n";
  auto table = load_embeddings(dir.path / "v.vec", vocab_of({"cat"}));
  CHECK(table.covered_count() == 1);
}

TEST_CASE("row_stochastic scales to unit L1 mass") {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors.resize(2, 2);
  t.vectors << 2, 2, 3, -1;
  t.covered = {0, 1};
  t.row_of = {0, 1};
  auto out = row_stochastic(t);
  CHECK(out.vectors(0, 0) == doctest::Approx(0.5));
  CHECK(out.vectors(0, 1) == doctest::Approx(0.5));
  // signed vector: normalize by the sum of absolute values
  CHECK(out.vectors(1, 0) == doctest::Approx(0.75));
  CHECK(out.vectors(1, 1) == doctest::Approx(-0.25));
}

TEST_CASE("row_stochastic is idempotent") {
  testing::Rng rng(3);
  EmbeddingTable t;
  t.dim = 5;
  t.vectors.resize(4, 5);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j) t.vectors(i, j) = rng.normal();
  t.covered = {0, 1, 2, 3};
  t.row_of = {0, 1, 2, 3};
  auto once = row_stochastic(t);
  auto twice = row_stochastic(once);
  CHECK((twice.vectors - once.vectors).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("row_stochastic rejects zero vectors") {
  EmbeddingTable t;
  t.dim = 2;
  t.vectors = DenseMat::Zero(1, 2);
  t.covered = {0};
  t.row_of = {0};
  CHECK_THROWS_AS(row_stochastic(t), Error);
}

namespace {

EmbeddingTable table_from_points(const DenseMat& pts) {
  EmbeddingTable t;
  t.dim = static_cast<int>(pts.cols());
  t.vectors = pts;
  t.covered.resize(pts.rows());
  t.row_of.resize(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i) {
    t.covered[i] = i;
    t.row_of[i] = i;
  }
  return t;
}

}  // namespace

TEST_CASE("knn on collinear points shows self-inclusion and asymmetry") {
  DenseMat pts(3, 1);
  pts << 0.0, 1.0, 3.0;  // A, B, C
  NeighborhoodIndex index(table_from_points(pts), 1);
  const auto& a = index.neighborhood(0);
  CHECK(a.terms == std::vector<Index>{0, 1});  // A then B
  CHECK(a.distances[0] == 0.0);
  CHECK(a.sigma == doctest::Approx(1.0));
  const auto& c = index.neighborhood(2);
  CHECK(c.terms == std::vector<Index>{2, 1});  // B in knn(C)
  const auto& b = index.neighborhood(1);
  // ... but C not in knn(B): the asymmetry witness
  CHECK(b.terms == std::vector<Index>{1, 0});
}

TEST_CASE("knn saturates when k exceeds the table") {
  DenseMat pts(3, 2);
  pts << 0, 0, 1, 0, 0, 1;
  NeighborhoodIndex index(table_from_points(pts), 10);
  CHECK(index.neighborhood(0).terms.size() == 3);
}

TEST_CASE("knn ties break by ascending vocabulary index") {
  // integer coordinates keep the distance computation exact
  DenseMat pts(4, 2);
  pts << 0, 0,
         0, 2,
         2, 0,
         0, -2;  // terms 1, 2, 3 all at distance 2 from term 0
  NeighborhoodIndex index(table_from_points(pts), 2);
  CHECK(index.neighborhood(0).terms == std::vector<Index>{0, 1, 2});
}

TEST_CASE("knn equals a brute-force all-pairs oracle") {
  testing::Rng rng(41);
  const Index n = 120;
  const int dim = 6;
  DenseMat pts(n, dim);
  for (Index i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) pts(i, d) = rng.normal();
  const int k = 7;
  NeighborhoodIndex index(table_from_points(pts), k);
  for (Index i = 0; i < n; ++i) {
    // oracle: direct squared distances, stable sort, index tie-break
    std::vector<std::pair<double, Index>> cand;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((pts.row(i) - pts.row(j)).squaredNorm(), j);
    }
    std::sort(cand.begin(), cand.end());
    const auto& nb = index.neighborhood(i);
    REQUIRE(nb.terms.size() == static_cast<std::size_t>(k + 1));
    CHECK(nb.terms[0] == i);
    for (int q = 0; q < k; ++q) CHECK(nb.terms[q + 1] == cand[q].second);
    CHECK(nb.sigma == doctest::Approx(std::sqrt(cand[k - 1].first)).epsilon(1e-12));
    for (std::size_t q = 1; q < nb.distances.size(); ++q)
      CHECK(nb.distances[q] >= nb.distances[q - 1]);
  }
}

TEST_CASE("knn construction is thread-count independent") {
  testing::Rng rng(43);
  DenseMat pts(60, 4);
  for (Index i = 0; i < 60; ++i)
    for (int d = 0; d < 4; ++d) pts(i, d) = rng.normal();
  NeighborhoodIndex serial(table_from_points(pts), 4, 1);
  NeighborhoodIndex parallel(table_from_points(pts), 4, 4);
  for (Index i = 0; i < 60; ++i) {
    CHECK(serial.neighborhood(i).terms == parallel.neighborhood(i).terms);
    CHECK(serial.neighborhood(i).sigma == parallel.neighborhood(i).sigma);
  }
}

TEST_CASE("sigma equals the maximum neighborhood distance") {
  testing::Rng rng(47);
  DenseMat pts(30, 3);
  for (Index i = 0; i < 30; ++i)
    for (int d = 0; d < 3; ++d) pts(i, d) = rng.uniform();
  NeighborhoodIndex index(table_from_points(pts), 4);
  for (Index i = 0; i < 30; ++i) {
    const auto& nb = index.neighborhood(i);
    double max_d = 0;
    for (double d : nb.distances) max_d = std::max(max_d, d);
    CHECK(nb.sigma == max_d);
  }
}

TEST_CASE("uncovered terms raise UncoveredTerm") {
  DenseMat pts(2, 2);
  pts << 0, 0, 1, 1;
  EmbeddingTable t = table_from_points(pts);
  t.row_of = {0, 1, -1};  // a third vocab term without a vector
  NeighborhoodIndex index(t, 1);
  CHECK_THROWS_AS(index.neighborhood(2), Error);
}

TEST_SUITE_END();
