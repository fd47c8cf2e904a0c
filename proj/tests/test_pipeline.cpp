#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "semblur/error.hpp"
#include "semblur/io.hpp"
#include "semblur/pipeline.hpp"

using namespace semblur;

TEST_SUITE_BEGIN("pipeline");

namespace {

// small but structured corpus so the whole pipeline runs in milliseconds
testing::SyntheticCorpus small_corpus(std::uint64_t seed, int synonyms = 0) {
  testing::SyntheticSpec spec;
  spec.themes = 3;
  spec.docs_per_theme = 60;
  spec.terms_per_theme = 80;
  spec.noise_terms = 30;
  spec.doc_len = 10;
  spec.noise_len = 3;
  spec.synonyms = synonyms;
  return testing::make_synthetic(seed, spec);
}

PipelineConfig base_config(const std::filesystem::path& dir) {
  PipelineConfig c;
  c.corpus_path = dir / "corpus.jsonl";
  c.affinity = Affinity::DT;
  c.embedding_dim = 3;
  c.clusterer = ClustererKind::MeanShift;
  c.bandwidth = 0.05;
  c.min_cluster_size = 10;
  c.seed = 4242;
  c.output_dir = dir / "out";
  c.heatmap_top_n = 50;
  return c;
}

}  // namespace

TEST_CASE("config parsing applies defaults and rejects junk") {
  testing::TempDir dir("cfg");
  {
    std::ofstream f(dir.path / "ok.json");
    f << R"({"corpus": "c.jsonl", "output_dir": "out", "bandwidth": 0.01})";
  }
  auto c = load_config(dir.path / "ok.json");
  CHECK(c.blur_k == 4);
  CHECK(c.min_df == 1.0);
  CHECK(c.low_pass_quantile == 0.95);
  CHECK(c.affinity == Affinity::DT);

  {
    std::ofstream f(dir.path / "bad.json");
    f << R"({"corpus": "c.jsonl", "output_dir": "out", "bandwidht": 0.01})";
  }
  CHECK_THROWS_AS(load_config(dir.path / "bad.json"), Error);

  {
    std::ofstream f(dir.path / "dse.json");
    f << R"({"corpus": "c.jsonl", "output_dir": "out", "affinity": "DSE",
             "bandwidth": 0.01})";
  }
  // DSE without embeddings must fail validation
  CHECK_THROWS_AS(load_config(dir.path / "dse.json"), Error);
}

TEST_CASE("environment variable overrides the output directory") {
  testing::TempDir dir("env");
  {
    std::ofstream f(dir.path / "c.json");
    f << R"({"corpus": "c.jsonl", "output_dir": "orig", "bandwidth": 0.01})";
  }
  setenv("SEMBLUR_OUTPUT_DIR", "/tmp/overridden", 1);
  auto c = load_config(dir.path / "c.json");
  unsetenv("SEMBLUR_OUTPUT_DIR");
  CHECK(c.output_dir == std::filesystem::path("/tmp/overridden"));
}

TEST_CASE("DT pipeline runs end to end on a clean synthetic corpus") {
  testing::TempDir dir("run_dt");
  auto corpus = small_corpus(1);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);
  auto config = base_config(dir.path);
  auto manifest = run_pipeline(config);

  CHECK(manifest.data["clusters"]["final"].get<int>() == 3);
  CHECK(manifest.data["metrics"]["purity_final"].get<double>() == 1.0);
  CHECK(std::filesystem::exists(config.output_dir / "assignments_final.csv"));
  CHECK(std::filesystem::exists(config.output_dir / "manifest.json"));
  CHECK(std::filesystem::exists(config.output_dir / "metrics.json"));
  CHECK(std::filesystem::exists(config.output_dir / "heatmap_final.pgm"));
}

TEST_CASE("identical configs produce identical artifacts and digests") {
  testing::TempDir dir("determinism");
  auto corpus = small_corpus(2);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);

  auto config_a = base_config(dir.path);
  config_a.output_dir = dir.path / "a";
  auto ma = run_pipeline(config_a);
  auto config_b = base_config(dir.path);
  config_b.output_dir = dir.path / "b";
  auto mb = run_pipeline(config_b);

  CHECK(ma.data["outputs"] == mb.data["outputs"]);
  CHECK(ma.outputs_digest() == mb.outputs_digest());
  const auto bytes_a = read_all_lines(dir.path / "a" / "assignments_final.csv");
  const auto bytes_b = read_all_lines(dir.path / "b" / "assignments_final.csv");
  CHECK(bytes_a == bytes_b);
}

TEST_CASE("DSE run with synonym noise scores at least as well as DT") {
  testing::TempDir dir("dse_vs_dt");
  auto corpus = small_corpus(3, /*synonyms=*/4);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);
  DenseMat emb = testing::make_group_embeddings(corpus, 16, 0.02, 3);
  testing::write_embedding_file(dir.path / "vectors.vec", corpus, emb);

  auto dt_config = base_config(dir.path);
  dt_config.output_dir = dir.path / "dt";
  auto dt_manifest = run_pipeline(dt_config);

  auto dse_config = base_config(dir.path);
  dse_config.affinity = Affinity::DSE;
  dse_config.embeddings_path = dir.path / "vectors.vec";
  dse_config.output_dir = dir.path / "dse";
  auto dse_manifest = run_pipeline(dse_config);

  const double dt_purity =
      dt_manifest.data["metrics"]["purity_final"].get<double>();
  const double dse_purity =
      dse_manifest.data["metrics"]["purity_final"].get<double>();
  CHECK(dse_purity >= dt_purity);
  CHECK(std::filesystem::exists(dir.path / "dse" / "coverage.csv"));
  CHECK(std::filesystem::exists(dir.path / "dse" / "dse.triplets"));

  // compare: same corpus, deltas line up with the manifests
  auto rep = compare_manifests(dt_manifest, dse_manifest);
  CHECK(rep.data["rows"][1]["purity_delta"].get<double>() ==
        doctest::Approx(dse_purity - dt_purity));
}

TEST_CASE("compare rejects manifests from different corpora") {
  testing::TempDir dir("cmp");
  auto ca = small_corpus(4);
  auto cb = small_corpus(5);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", ca);
  auto config = base_config(dir.path);
  config.output_dir = dir.path / "a";
  auto ma = run_pipeline(config);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", cb);
  config.output_dir = dir.path / "b";
  auto mb = run_pipeline(config);
  CHECK_THROWS_AS(compare_manifests(ma, mb), Error);
}

TEST_CASE("comparing a run with itself gives zero deltas") {
  testing::TempDir dir("cmp_self");
  auto corpus = small_corpus(6);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);
  auto config = base_config(dir.path);
  auto m = run_pipeline(config);
  auto rep = compare_manifests(m, m);
  for (const auto& row : rep.data["rows"]) {
    CHECK(row["clusters_delta"].get<int>() == 0);
    CHECK(row["purity_delta"].get<double>() == 0.0);
  }
}

TEST_CASE("pipeline resumes from persisted intermediates bit-identically") {
  testing::TempDir dir("resume");
  auto corpus = small_corpus(7);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);
  auto config = base_config(dir.path);
  auto full = run_pipeline(config);
  const auto full_digest = full.outputs_digest();
  const auto final_csv =
      read_all_lines(config.output_dir / "assignments_final.csv");

  for (Stage stage : {Stage::Filter, Stage::Cluster, Stage::Revise}) {
    auto resumed = run_pipeline(config, stage);
    CHECK(resumed.outputs_digest() == full_digest);
    CHECK(read_all_lines(config.output_dir / "assignments_final.csv") ==
          final_csv);
  }
}

TEST_CASE("failed stages leave a FAILED marker and stage-tagged error") {
  testing::TempDir dir("failmark");
  auto corpus = small_corpus(8);
  testing::write_jsonl_corpus(dir.path / "corpus.jsonl", corpus);
  auto config = base_config(dir.path);
  config.affinity = Affinity::DSE;
  config.embeddings_path = dir.path / "missing.vec";
  bool threw = false;
  try {
    run_pipeline(config);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("stage blur") != std::string::npos);
  }
  CHECK(threw);
  CHECK(std::filesystem::exists(config.output_dir / "FAILED"));
}

TEST_CASE("evaluate_files scores an assignment csv against labels") {
  testing::TempDir dir("evalcsv");
  {
    std::ofstream a(dir.path / "assign.csv");
    a << "doc_id,cluster_id\nd1,0\nd2,0\nd3,1\nd4,-1\n";
    std::ofstream l(dir.path / "labels.csv");
    l << "d1,x\nd2,y\nd3,y\nd4,x\n";
  }
  auto metrics = evaluate_files(dir.path / "assign.csv", dir.path / "labels.csv");
  CHECK(metrics["counted"].get<int>() == 3);
  CHECK(metrics["excluded"].get<int>() == 1);
  CHECK(metrics["purity"].get<double>() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("triplet io round trips exactly") {
  testing::Rng rng(9);
  testing::TempDir dir("trip");
  SpMat m = testing::random_sparse(rng, 15, 11, 0.3);
  write_triplets(dir.path / "m.triplets", m);
  SpMat back = read_triplets(dir.path / "m.triplets");
  CHECK(DenseMat(back) == DenseMat(m));
}

TEST_SUITE_END();
