#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semblur/error.hpp"
#include "semblur/pipeline.hpp"
#include "reuters.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

int exit_code_for(const semblur::Error& e) {
  return e.code() == semblur::ErrorCode::ConfigError ? kExitConfig : kExitStage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semblur: document clustering with semantic term blurring and "
               "stochastic-barcode cluster revision"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string resume_from;
  auto* run = app.add_subcommand("run", "execute the pipeline from a config file");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--resume-from", resume_from,
                  "restart from a stage, reusing earlier artifacts "
                  "(ingest|blur|filter|embed|cluster|revise|evaluate)");
  int threads_override = -1;
  run->add_option("--threads", threads_override, "worker thread cap");

  // compare
  std::string manifest_a, manifest_b, compare_csv;
  auto* cmp = app.add_subcommand("compare", "diff two run manifests");
  cmp->add_option("manifest_a", manifest_a, "first manifest.json")->required();
  cmp->add_option("manifest_b", manifest_b, "second manifest.json")->required();
  cmp->add_option("--csv", compare_csv, "also write the delta table as CSV");

  // eval
  std::string assignments_path, labels_path;
  auto* ev = app.add_subcommand("eval", "score an assignment CSV against labels");
  ev->add_option("--assignments", assignments_path, "doc_id,cluster_id CSV")
      ->required();
  ev->add_option("--labels", labels_path, "doc_id,label CSV")->required();

  // reuters conversion (for replication experiments)
  std::vector<std::string> sgm_files;
  std::string reuters_out;
  std::string topics_arg = "acq,crude,earn,interest,money-fx,trade";
  int min_words = 50;
  auto* reut = app.add_subcommand(
      "convert-reuters", "convert Reuters-21578 .sgm files to a JSONL corpus");
  reut->add_option("sgm", sgm_files, "reut2-*.sgm files")->required();
  reut->add_option("--out", reuters_out, "output JSONL path")->required();
  reut->add_option("--topics", topics_arg, "comma-separated topic whitelist");
  reut->add_option("--min-words", min_words, "minimum document word count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      semblur::PipelineConfig config = semblur::load_config(config_path);
      if (threads_override >= 0) config.threads = threads_override;
      semblur::Stage from = semblur::Stage::Ingest;
      if (!resume_from.empty()) {
        bool found = false;
        for (auto s : {semblur::Stage::Ingest, semblur::Stage::Blur,
                       semblur::Stage::Filter, semblur::Stage::Embed,
                       semblur::Stage::Cluster, semblur::Stage::Revise,
                       semblur::Stage::Evaluate})
          if (resume_from == semblur::stage_name(s)) {
            from = s;
            found = true;
          }
        if (!found)
          throw semblur::Error(semblur::ErrorCode::ConfigError,
                               "unknown stage: " + resume_from);
      }
      semblur::RunManifest manifest = semblur::run_pipeline(config, from);
      std::cout << "run complete: " << manifest.data["clusters"]["initial"]
                << " -> " << manifest.data["clusters"]["final"]
                << " clusters";
      if (manifest.data["metrics"].contains("purity_final"))
        std::cout << ", purity "
                  << manifest.data["metrics"]["purity_initial"].get<double>()
                  << " -> "
                  << manifest.data["metrics"]["purity_final"].get<double>();
      std::cout << "\nmanifest: "
                << (config.output_dir / "manifest.json").string() << '\n';
    } else if (*cmp) {
      auto a = semblur::RunManifest::load(manifest_a);
      auto b = semblur::RunManifest::load(manifest_b);
      auto rep = semblur::compare_manifests(a, b);
      std::cout << rep.text;
      if (!compare_csv.empty()) {
        std::ofstream out(compare_csv);
        out << rep.csv;
      }
    } else if (*ev) {
      auto metrics = semblur::evaluate_files(assignments_path, labels_path);
      std::cout << metrics.dump(2) << '\n';
    } else if (*reut) {
      semblur::tools::ReutersOptions opts;
      opts.min_words = min_words;
      std::string topic;
      for (char c : topics_arg) {
        if (c == ',') {
          if (!topic.empty()) opts.topics.push_back(topic);
          topic.clear();
        } else {
          topic += c;
        }
      }
      if (!topic.empty()) opts.topics.push_back(topic);
      std::vector<std::filesystem::path> files(sgm_files.begin(),
                                               sgm_files.end());
      const auto n =
          semblur::tools::convert_reuters_sgml(files, reuters_out, opts);
      std::cout << "wrote " << n << " documents to " << reuters_out << '\n';
    }
  } catch (const semblur::Error& e) {
    std::cerr << "error (" << semblur::to_string(e.code()) << "): " << e.what()
              << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
