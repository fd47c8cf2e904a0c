#include "semblur/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "semblur/blur.hpp"
#include "semblur/corpus.hpp"
#include "semblur/error.hpp"
#include "semblur/evaluate.hpp"
#include "semblur/io.hpp"
#include "semblur/spectral.hpp"

namespace semblur {

namespace {

using nlohmann::json;

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

// splits one CSV line, honoring double-quoted fields
std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

struct Clock {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  return j[key].get<T>();
}

}  // namespace

json PipelineConfig::to_json() const {
  json j;
  j["corpus"] = corpus_path.string();
  j["corpus_dir"] = corpus_dir.string();
  j["labels"] = labels_csv ? labels_csv->string() : "";
  j["stopwords"] = stopwords_path ? stopwords_path->string() : "";
  j["embeddings"] = embeddings_path ? embeddings_path->string() : "";
  j["affinity"] = affinity == Affinity::DSE ? "DSE" : "DT";
  j["blur_k"] = blur_k;
  j["min_df"] = min_df;
  j["low_pass_quantile"] = low_pass_quantile;
  j["embedding_dim"] = embedding_dim;
  j["clusterer"] = clusterer == ClustererKind::KMeans ? "kmeans" : "meanshift";
  j["bandwidth"] = bandwidth;
  if (bandwidth_quantile) j["bandwidth_quantile"] = *bandwidth_quantile;
  j["kmeans_k"] = kmeans_k;
  j["min_cluster_size"] = static_cast<std::int64_t>(min_cluster_size);
  j["max_revision_iterations"] = max_revision_iterations;
  j["correlation"] =
      correlation == CorrelationMode::DotProduct ? "dot" : "cosine";
  j["embedding_norm"] =
      embedding_norm == RowNormalization::Sum ? "sum" : "l1";
  j["skip_leading_vector"] = skip_leading_vector;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["threads"] = threads;
  j["heatmap_top_n"] = static_cast<std::int64_t>(heatmap_top_n);
  j["write_heatmaps"] = write_heatmaps;
  j["export_matrices"] = export_matrices;
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::ConfigError, "config is not a JSON object");

  static const std::vector<std::string> known = {
      "corpus", "corpus_dir", "labels", "stopwords", "embeddings", "affinity",
      "blur_k", "min_df", "low_pass_quantile", "embedding_dim", "clusterer",
      "bandwidth", "bandwidth_quantile", "kmeans_k", "min_cluster_size",
      "max_revision_iterations", "correlation", "embedding_norm",
      "skip_leading_vector", "seed", "output_dir", "threads", "heatmap_top_n",
      "write_heatmaps", "export_matrices"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::ConfigError, "unknown config key: " + key);

  PipelineConfig c;
  try {
    c.corpus_path = get_or<std::string>(j, "corpus", "");
    c.corpus_dir = get_or<std::string>(j, "corpus_dir", "");
    if (auto s = get_or<std::string>(j, "labels", ""); !s.empty())
      c.labels_csv = s;
    if (auto s = get_or<std::string>(j, "stopwords", ""); !s.empty())
      c.stopwords_path = s;
    if (auto s = get_or<std::string>(j, "embeddings", ""); !s.empty())
      c.embeddings_path = s;
    const auto aff = get_or<std::string>(j, "affinity", "DT");
    if (aff == "DT") c.affinity = Affinity::DT;
    else if (aff == "DSE") c.affinity = Affinity::DSE;
    else throw Error(ErrorCode::ConfigError, "affinity must be DT or DSE");
    c.blur_k = get_or<int>(j, "blur_k", 4);
    c.min_df = get_or<double>(j, "min_df", 1.0);
    c.low_pass_quantile = get_or<double>(j, "low_pass_quantile", 0.95);
    c.embedding_dim = get_or<int>(j, "embedding_dim", 5);
    const auto cl = get_or<std::string>(j, "clusterer", "meanshift");
    if (cl == "meanshift") c.clusterer = ClustererKind::MeanShift;
    else if (cl == "kmeans") c.clusterer = ClustererKind::KMeans;
    else throw Error(ErrorCode::ConfigError, "clusterer must be meanshift or kmeans");
    c.bandwidth = get_or<double>(j, "bandwidth", 0.0);
    if (j.contains("bandwidth_quantile") && !j["bandwidth_quantile"].is_null())
      c.bandwidth_quantile = j["bandwidth_quantile"].get<double>();
    c.kmeans_k = get_or<int>(j, "kmeans_k", 8);
    c.min_cluster_size = get_or<std::int64_t>(j, "min_cluster_size", 5);
    c.max_revision_iterations = get_or<int>(j, "max_revision_iterations", 100);
    const auto corr = get_or<std::string>(j, "correlation", "cosine");
    if (corr == "cosine") c.correlation = CorrelationMode::Cosine;
    else if (corr == "dot") c.correlation = CorrelationMode::DotProduct;
    else throw Error(ErrorCode::ConfigError, "correlation must be cosine or dot");
    const auto norm = get_or<std::string>(j, "embedding_norm", "l1");
    if (norm == "l1") c.embedding_norm = RowNormalization::L1Abs;
    else if (norm == "sum") c.embedding_norm = RowNormalization::Sum;
    else throw Error(ErrorCode::ConfigError, "embedding_norm must be l1 or sum");
    c.skip_leading_vector = get_or<bool>(j, "skip_leading_vector", true);
    c.seed = get_or<std::uint64_t>(j, "seed", 42);
    c.output_dir = get_or<std::string>(j, "output_dir", "");
    c.threads = get_or<int>(j, "threads", 1);
    c.heatmap_top_n = get_or<std::int64_t>(j, "heatmap_top_n", 7000);
    c.write_heatmaps = get_or<bool>(j, "write_heatmaps", true);
    c.export_matrices = get_or<bool>(j, "export_matrices", true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }

  if (const char* env = std::getenv("SEMBLUR_OUTPUT_DIR"); env && *env)
    c.output_dir = env;
  validate_config(c);
  return c;
}

void validate_config(const PipelineConfig& c) {
  if (c.corpus_path.empty() && c.corpus_dir.empty())
    throw Error(ErrorCode::ConfigError, "config needs corpus or corpus_dir");
  if (!c.corpus_path.empty() && !c.corpus_dir.empty())
    throw Error(ErrorCode::ConfigError, "corpus and corpus_dir are exclusive");
  if (c.output_dir.empty())
    throw Error(ErrorCode::ConfigError, "output_dir is required");
  if (c.affinity == Affinity::DSE && !c.embeddings_path)
    throw Error(ErrorCode::ConfigError, "affinity DSE requires embeddings");
  if (c.blur_k < 1)
    throw Error(ErrorCode::ConfigError, "blur_k must be >= 1");
  if (c.min_df < 0)
    throw Error(ErrorCode::ConfigError, "min_df must be >= 0");
  if (!(c.low_pass_quantile > 0.0 && c.low_pass_quantile <= 1.0))
    throw Error(ErrorCode::ConfigError, "low_pass_quantile must be in (0,1]");
  if (c.embedding_dim < 1)
    throw Error(ErrorCode::ConfigError, "embedding_dim must be >= 1");
  if (c.clusterer == ClustererKind::MeanShift && !c.bandwidth_quantile &&
      !(c.bandwidth > 0.0))
    throw Error(ErrorCode::ConfigError,
                "meanshift needs bandwidth > 0 or bandwidth_quantile");
  if (c.bandwidth_quantile &&
      !(*c.bandwidth_quantile > 0.0 && *c.bandwidth_quantile < 1.0))
    throw Error(ErrorCode::ConfigError, "bandwidth_quantile must be in (0,1)");
  if (c.kmeans_k < 1)
    throw Error(ErrorCode::ConfigError, "kmeans_k must be >= 1");
  if (c.min_cluster_size < 1)
    throw Error(ErrorCode::ConfigError, "min_cluster_size must be >= 1");
  if (c.max_revision_iterations < 1)
    throw Error(ErrorCode::ConfigError, "max_revision_iterations must be >= 1");
  if (c.heatmap_top_n < 1)
    throw Error(ErrorCode::ConfigError, "heatmap_top_n must be >= 1");
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Blur: return "blur";
    case Stage::Filter: return "filter";
    case Stage::Embed: return "embed";
    case Stage::Cluster: return "cluster";
    case Stage::Revise: return "revise";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

std::string RunManifest::outputs_digest() const {
  std::string blob;
  if (data.contains("outputs"))
    for (const auto& [name, hash] : data["outputs"].items())
      blob += name + ":" + hash.get<std::string>() + "\n";
  return hash_hex(fnv1a64(blob.data(), blob.size()));
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  RunManifest m;
  m.data = json::parse(in, nullptr, false);
  if (m.data.is_discarded())
    throw Error(ErrorCode::MalformedLine, "manifest is not valid JSON");
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << data.dump(2) << '\n';
}

namespace {

struct PipelineState {
  std::vector<Document> docs;
  std::vector<std::optional<std::string>> labels;
  Vocabulary vocab;
  SpMat occurrence;            // raw DT
  SpMat affinity_matrix;       // DT or DSE before filtering
  SpMat features;              // filtered matrix used downstream
  std::vector<Index> zero_rows;
  SpectralEmbedding embedding;
  ClusterAssignment initial;
  RevisionResult revision;
  json metrics;
  json shapes;
  bool labeled = false;
};

std::string corpus_fingerprint(const PipelineConfig& c) {
  if (!c.corpus_path.empty()) return hash_hex(hash_file(c.corpus_path));
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(c.corpus_dir))
    if (e.is_regular_file() && e.path().extension() == ".txt")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string blob;
  for (const auto& f : files)
    blob += f.filename().string() + ":" + hash_hex(hash_file(f)) + "\n";
  if (c.labels_csv) blob += "labels:" + hash_hex(hash_file(*c.labels_csv));
  return hash_hex(fnv1a64(blob.data(), blob.size()));
}

void write_assignment_csv(const std::filesystem::path& path,
                          const std::vector<Document>& docs,
                          const std::vector<std::int32_t>& labels) {
  std::vector<std::string> lines;
  lines.reserve(docs.size() + 1);
  lines.push_back("doc_id,cluster_id");
  for (std::size_t i = 0; i < docs.size(); ++i)
    lines.push_back(csv_quote(docs[i].id) + "," + std::to_string(labels[i]));
  write_lines(path, lines);
}

std::vector<std::int32_t> read_assignment_csv(
    const std::filesystem::path& path, const std::vector<Document>& docs) {
  const auto lines = read_all_lines(path);
  if (lines.empty() || lines[0] != "doc_id,cluster_id")
    throw Error(ErrorCode::MalformedLine, "bad assignment csv " + path.string());
  if (lines.size() != docs.size() + 1)
    throw Error(ErrorCode::CorpusMismatch,
                "assignment csv row count does not match corpus");
  std::vector<std::int32_t> labels(docs.size(), kUnassigned);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = csv_split(lines[i]);
    if (fields.size() != 2)
      throw Error(ErrorCode::MalformedLine, "bad assignment row: " + lines[i]);
    if (fields[0] != docs[i - 1].id)
      throw Error(ErrorCode::CorpusMismatch,
                  "assignment doc order mismatch at row " + std::to_string(i));
    labels[i - 1] = static_cast<std::int32_t>(std::stol(fields[1]));
  }
  return labels;
}

void write_embedding_csv(const std::filesystem::path& path,
                         const std::vector<Document>& docs,
                         const DenseMat& coords) {
  std::vector<std::string> lines;
  lines.reserve(docs.size() + 1);
  std::string header = "doc_id";
  for (Index c = 0; c < coords.cols(); ++c)
    header += ",c" + std::to_string(c + 1);
  lines.push_back(header);
  for (Index i = 0; i < coords.rows(); ++i) {
    std::string row = csv_quote(docs[i].id);
    for (Index c = 0; c < coords.cols(); ++c)
      row += "," + format_double(coords(i, c));
    lines.push_back(row);
  }
  write_lines(path, lines);
}

DenseMat read_embedding_csv(const std::filesystem::path& path,
                            const std::vector<Document>& docs) {
  const auto lines = read_all_lines(path);
  if (lines.size() != docs.size() + 1)
    throw Error(ErrorCode::CorpusMismatch,
                "embedding csv row count does not match corpus");
  const auto header = csv_split(lines[0]);
  const Index r = static_cast<Index>(header.size()) - 1;
  DenseMat coords(static_cast<Index>(docs.size()), r);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = csv_split(lines[i]);
    if (static_cast<Index>(fields.size()) != r + 1)
      throw Error(ErrorCode::MalformedLine, "bad embedding row: " + lines[i]);
    for (Index c = 0; c < r; ++c)
      coords(static_cast<Index>(i) - 1, c) = std::stod(fields[c + 1]);
  }
  return coords;
}

SpMat dense_rows_to_sparse(const DenseMat& m) {
  std::vector<Triplet> trips;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) trips.emplace_back(i, j, m(i, j));
  SpMat out(m.rows(), m.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

json purity_to_json(const PurityReport& p, std::int32_t clusters) {
  json j;
  j["clusters"] = clusters;
  j["purity"] = p.purity;
  j["purity_inclusive"] = p.purity_inclusive;
  json per = json::array();
  for (const auto& c : p.per_cluster) {
    per.push_back({{"cluster", c.cluster},
                   {"majority_class", c.majority_class},
                   {"fraction", c.fraction}});
  }
  j["per_cluster"] = per;
  return j;
}

}  // namespace

RunManifest run_pipeline(const PipelineConfig& config, Stage from) {
  validate_config(config);
  namespace fs = std::filesystem;
  const fs::path out = config.output_dir;
  fs::create_directories(out);
  std::error_code ec;
  fs::remove(out / "FAILED", ec);
  {
    // snapshot the configuration up front so it survives failed stages
    std::ofstream cj(out / "config.json");
    cj << config.to_json().dump(2) << '\n';
  }

  PipelineState st;
  json timings;
  Stage current = Stage::Ingest;

  auto persist = [&](Stage s) { return s >= from; };

  try {
    // ---- ingest (always executed; deterministic and cheap) ----
    {
      Clock clock;
      current = Stage::Ingest;
      StopwordSet stopwords;
      if (config.stopwords_path)
        stopwords = load_stopwords(*config.stopwords_path);
      st.docs = config.corpus_path.empty()
                    ? load_text_dir_corpus(config.corpus_dir, config.labels_csv)
                    : load_jsonl_corpus(config.corpus_path);
      if (st.docs.empty())
        throw Error(ErrorCode::AllDocsEmpty, "corpus has no documents");
      st.labels.reserve(st.docs.size());
      for (const auto& d : st.docs) {
        st.labels.push_back(d.label);
        st.labeled = st.labeled || d.label.has_value();
      }
      CorpusMatrix cm = build_occurrence(st.docs, stopwords);
      st.vocab = std::move(cm.vocab);
      st.occurrence = std::move(cm.occurrence);
      st.shapes["documents"] = st.occurrence.rows();
      st.shapes["vocabulary"] = st.occurrence.cols();
      if (persist(Stage::Ingest)) {
        write_lines(out / "vocabulary.txt", st.vocab.terms);
        if (config.export_matrices)
          write_triplets(out / "dt.triplets", st.occurrence);
      }
      timings[stage_name(Stage::Ingest)] = clock.ms();
    }

    // ---- blur ----
    {
      Clock clock;
      current = Stage::Blur;
      if (config.affinity == Affinity::DSE) {
        if (from > Stage::Blur) {
          st.affinity_matrix = read_triplets(out / "dse.triplets");
        } else {
          EmbeddingTable table =
              load_embeddings(*config.embeddings_path, st.vocab);
          table = row_stochastic(std::move(table), config.embedding_norm);
          NeighborhoodIndex index(table, config.blur_k, config.threads);
          BlurOperator op = build_blur_operator(index);
          st.affinity_matrix = apply_blur(st.occurrence, op);
          write_coverage_report(out / "coverage.csv", st.vocab, table);
          if (config.export_matrices) {
            write_triplets(out / "blur_w.triplets", op.weights);
            write_triplets(out / "dse.triplets", st.affinity_matrix);
          }
        }
      } else {
        st.affinity_matrix = st.occurrence;
      }
      st.shapes["affinity_columns"] = st.affinity_matrix.cols();
      timings[stage_name(Stage::Blur)] = clock.ms();
    }

    // ---- filter ----
    {
      Clock clock;
      current = Stage::Filter;
      if (from > Stage::Filter) {
        st.features = read_triplets(out / "features.triplets");
      } else {
        FilterResult high = high_pass_filter(st.affinity_matrix, config.min_df);
        FilterResult low = low_pass_filter(high.matrix, config.low_pass_quantile);
        st.features = low.matrix;
        // surviving original column ids and their terms, for inspection
        std::vector<std::string> lines;
        lines.push_back("column,term");
        const bool vocab_aligned =
            st.affinity_matrix.cols() == st.vocab.size();
        for (Index j : low.kept) {
          const Index original = high.kept[j];
          lines.push_back(std::to_string(original) + "," +
                          (vocab_aligned ? csv_quote(st.vocab.terms[original])
                                         : std::string()));
        }
        write_lines(out / "features_columns.csv", lines);
        write_triplets(out / "features.triplets", st.features);
      }
      const Vector rs = row_sums(st.features);
      st.zero_rows.clear();
      for (Index i = 0; i < rs.size(); ++i)
        if (rs[i] <= 0.0) st.zero_rows.push_back(i);
      st.shapes["filtered_columns"] = st.features.cols();
      st.shapes["zero_rows"] = static_cast<std::int64_t>(st.zero_rows.size());
      timings[stage_name(Stage::Filter)] = clock.ms();
    }

    // ---- embed ----
    {
      Clock clock;
      current = Stage::Embed;
      if (from > Stage::Embed) {
        st.embedding.coords = read_embedding_csv(out / "embedding.csv", st.docs);
        st.embedding.zero_rows = st.zero_rows;
      } else {
        EmbedOptions opts;
        opts.skip_leading = config.skip_leading_vector;
        opts.svd.seed = config.seed ^ 0x5eed5eedULL;
        st.embedding =
            embed_documents(st.features, config.embedding_dim, opts);
        write_embedding_csv(out / "embedding.csv", st.docs, st.embedding.coords);
      }
      timings[stage_name(Stage::Embed)] = clock.ms();
    }

    // ---- cluster ----
    {
      Clock clock;
      current = Stage::Cluster;
      if (from > Stage::Cluster) {
        st.initial = compact_labels(
            read_assignment_csv(out / "assignments_initial.csv", st.docs));
      } else {
        // zero rows are exempt: cluster only documents with features
        std::vector<Index> active;
        std::vector<bool> is_zero(st.docs.size(), false);
        for (Index i : st.zero_rows) is_zero[i] = true;
        for (Index i = 0; i < static_cast<Index>(st.docs.size()); ++i)
          if (!is_zero[i]) active.push_back(i);
        DenseMat pts(static_cast<Index>(active.size()),
                     st.embedding.coords.cols());
        for (std::size_t a = 0; a < active.size(); ++a)
          pts.row(static_cast<Index>(a)) = st.embedding.coords.row(active[a]);

        ClusterAssignment sub;
        if (config.clusterer == ClustererKind::MeanShift) {
          double h = config.bandwidth;
          if (config.bandwidth_quantile)
            h = estimate_bandwidth(pts, *config.bandwidth_quantile,
                                   config.seed ^ 0xba4dULL);
          MeanShiftOptions opts;
          opts.threads = config.threads;
          sub = mean_shift(pts, h, opts);
        } else {
          KMeansOptions opts;
          opts.seed = config.seed ^ 0x6b6d65616e73ULL;
          const int k =
              std::min<int>(config.kmeans_k, static_cast<int>(pts.rows()));
          sub = kmeans(pts, k, opts);
        }
        std::vector<std::int32_t> full(st.docs.size(), kUnassigned);
        for (std::size_t a = 0; a < active.size(); ++a)
          full[active[a]] = sub.labels[a];
        st.initial = compact_labels(full);
        write_assignment_csv(out / "assignments_initial.csv", st.docs,
                             st.initial.labels);
      }
      st.shapes["initial_clusters"] = st.initial.count;
      timings[stage_name(Stage::Cluster)] = clock.ms();
    }

    // ---- revise ----
    {
      Clock clock;
      current = Stage::Revise;
      if (from > Stage::Revise) {
        st.revision.assign = compact_labels(
            read_assignment_csv(out / "assignments_final.csv", st.docs));
        BarcodeResult bc = compute_barcodes(st.features, st.revision.assign);
        st.revision.barcodes = bc.barcodes;
        // trace from the original run
        const auto trace_lines = read_all_lines(out / "revision_trace.csv");
        for (std::size_t i = 1; i < trace_lines.size(); ++i) {
          const auto f = csv_split(trace_lines[i]);
          st.revision.trace.moves_per_iteration.push_back(std::stoi(f[1]));
          st.revision.trace.cluster_counts.push_back(std::stoi(f[2]));
        }
        st.revision.trace.iterations =
            static_cast<int>(st.revision.trace.moves_per_iteration.size());
        st.revision.trace.converged =
            !st.revision.trace.moves_per_iteration.empty() &&
            st.revision.trace.moves_per_iteration.back() == 0;
      } else {
        RevisionOptions opts;
        opts.max_iterations = config.max_revision_iterations;
        opts.reassign.mode = config.correlation;
        opts.reassign.threads = config.threads;
        st.revision =
            revise(st.features, st.initial, config.min_cluster_size, opts);
        write_assignment_csv(out / "assignments_final.csv", st.docs,
                             st.revision.assign.labels);
        write_triplets(out / "barcodes.triplets",
                       dense_rows_to_sparse(st.revision.barcodes.rows));
        std::vector<std::string> lines;
        lines.push_back("iteration,moves,clusters");
        for (std::size_t i = 0;
             i < st.revision.trace.moves_per_iteration.size(); ++i)
          lines.push_back(std::to_string(i + 1) + "," +
                          std::to_string(st.revision.trace.moves_per_iteration[i]) +
                          "," +
                          std::to_string(st.revision.trace.cluster_counts[i]));
        write_lines(out / "revision_trace.csv", lines);
      }
      st.shapes["final_clusters"] = st.revision.assign.count;
      timings[stage_name(Stage::Revise)] = clock.ms();
    }

    // ---- evaluate ----
    {
      Clock clock;
      current = Stage::Evaluate;
      st.metrics["revision"] = {
          {"iterations", st.revision.trace.iterations},
          {"moves", st.revision.trace.moves_per_iteration},
          {"cluster_counts", st.revision.trace.cluster_counts},
          {"converged", st.revision.trace.converged}};
      st.metrics["unassigned_documents"] = static_cast<std::int64_t>(
          std::count(st.revision.assign.labels.begin(),
                     st.revision.assign.labels.end(), kUnassigned));
      if (st.labeled) {
        ConfusionMatrix cm0 = confusion(st.initial, st.labels);
        PurityReport p0 = purity(cm0, "initial");
        ConfusionMatrix cm1 = confusion(st.revision.assign, st.labels);
        PurityReport p1 = purity(cm1, "revised");
        st.metrics["initial"] = purity_to_json(p0, st.initial.count);
        st.metrics["final"] = purity_to_json(p1, st.revision.assign.count);

        std::vector<std::string> lines;
        std::string header = "cluster";
        for (const auto& cls : cm1.classes) header += "," + csv_quote(cls);
        lines.push_back(header);
        for (Index k = 0; k < cm1.counts.rows(); ++k) {
          std::string row = std::to_string(cm1.cluster_ids[k]);
          for (Index j = 0; j < cm1.counts.cols(); ++j)
            row += "," + std::to_string(cm1.counts(k, j));
          lines.push_back(row);
        }
        write_lines(out / "confusion_final.csv", lines);
      } else {
        st.metrics["initial"] = {{"clusters", st.initial.count}};
        st.metrics["final"] = {{"clusters", st.revision.assign.count}};
      }
      {
        std::ofstream mj(out / "metrics.json");
        mj << st.metrics.dump(2) << '\n';
      }
      std::vector<std::string> flat;
      flat.push_back("key,value");
      flat.push_back("initial_clusters," + std::to_string(st.initial.count));
      flat.push_back("final_clusters," +
                     std::to_string(st.revision.assign.count));
      if (st.labeled) {
        flat.push_back("initial_purity," +
                       format_double(st.metrics["initial"]["purity"].get<double>()));
        flat.push_back("final_purity," +
                       format_double(st.metrics["final"]["purity"].get<double>()));
      }
      write_lines(out / "metrics.csv", flat);

      if (config.write_heatmaps) {
        HeatmapOptions hopts;
        hopts.top_n = config.heatmap_top_n;
        write_heatmap_pgm(out / "heatmap_initial.pgm",
                          barcode_heatmap(st.features, st.initial, hopts));
        write_heatmap_pgm(out / "heatmap_final.pgm",
                          barcode_heatmap(st.features, st.revision.assign, hopts));
      }
      timings[stage_name(Stage::Evaluate)] = clock.ms();
    }
  } catch (const Error& e) {
    std::ofstream marker(out / "FAILED");
    marker << stage_name(current) << ": " << e.what() << '\n';
    throw Error(e.code(), std::string("stage ") + stage_name(current) + ": " +
                              e.what() + " (partial outputs kept in " +
                              out.string() + ")");
  } catch (const std::exception& e) {
    std::ofstream marker(out / "FAILED");
    marker << stage_name(current) << ": " << e.what() << '\n';
    throw;
  }

  // ---- manifest ----
  RunManifest manifest;
  manifest.data["config"] = config.to_json();
  manifest.data["corpus_hash"] = corpus_fingerprint(config);
  manifest.data["shapes"] = st.shapes;
  manifest.data["stage_timings_ms"] = timings;
  manifest.data["clusters"] = {{"initial", st.initial.count},
                               {"final", st.revision.assign.count}};
  json summary;
  if (st.labeled) {
    summary["purity_initial"] = st.metrics["initial"]["purity"];
    summary["purity_final"] = st.metrics["final"]["purity"];
    summary["purity_initial_inclusive"] =
        st.metrics["initial"]["purity_inclusive"];
    summary["purity_final_inclusive"] = st.metrics["final"]["purity_inclusive"];
  }
  summary["revision_iterations"] = st.revision.trace.iterations;
  summary["revision_converged"] = st.revision.trace.converged;
  manifest.data["metrics"] = summary;

  // hash computed artifacts; the manifest and the config snapshot are
  // metadata (the snapshot embeds output_dir, which may differ between
  // otherwise identical runs)
  json outputs;
  std::vector<fs::path> artifacts;
  for (const auto& e : fs::directory_iterator(out))
    if (e.is_regular_file() && e.path().filename() != "manifest.json" &&
        e.path().filename() != "config.json")
      artifacts.push_back(e.path());
  std::sort(artifacts.begin(), artifacts.end());
  for (const auto& f : artifacts)
    outputs[f.filename().string()] = hash_hex(hash_file(f));
  manifest.data["outputs"] = outputs;
  manifest.data["outputs_digest"] = manifest.outputs_digest();
  manifest.save(out / "manifest.json");
  return manifest;
}

ComparisonReport compare_manifests(const RunManifest& a, const RunManifest& b) {
  const auto ha = a.data.value("corpus_hash", std::string());
  const auto hb = b.data.value("corpus_hash", std::string());
  if (ha.empty() || ha != hb)
    throw Error(ErrorCode::CorpusMismatch,
                "manifests reference different corpora");

  auto metric = [](const RunManifest& m, const char* key) -> double {
    return m.data["metrics"].contains(key)
               ? m.data["metrics"][key].get<double>()
               : std::numeric_limits<double>::quiet_NaN();
  };
  auto clusters = [](const RunManifest& m, const char* key) {
    return m.data["clusters"][key].get<std::int64_t>();
  };

  ComparisonReport rep;
  json rows = json::array();
  std::ostringstream text, csv;
  csv << "stage,clusters_a,clusters_b,clusters_delta,purity_a,purity_b,purity_delta\n";
  text << "stage      clusters A->B    purity A->B (delta)\n";
  for (const char* stage : {"initial", "final"}) {
    const auto ca = clusters(a, stage), cb = clusters(b, stage);
    const std::string pk = std::string("purity_") + stage;
    const double pa = metric(a, pk.c_str()), pb = metric(b, pk.c_str());
    json row;
    row["stage"] = stage;
    row["clusters_a"] = ca;
    row["clusters_b"] = cb;
    row["clusters_delta"] = cb - ca;
    if (!std::isnan(pa) && !std::isnan(pb)) {
      row["purity_a"] = pa;
      row["purity_b"] = pb;
      row["purity_delta"] = pb - pa;
    }
    rows.push_back(row);
    csv << stage << ',' << ca << ',' << cb << ',' << (cb - ca) << ',';
    char buf[128];
    if (!std::isnan(pa) && !std::isnan(pb)) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%+.6f", pa, pb, pb - pa);
      csv << buf << '\n';
      std::snprintf(buf, sizeof(buf), "%-10s %4lld -> %-4lld    %.4f -> %.4f (%+.4f)",
                    stage, static_cast<long long>(ca),
                    static_cast<long long>(cb), pa, pb, pb - pa);
      text << buf << '\n';
    } else {
      csv << ",,\n";
      std::snprintf(buf, sizeof(buf), "%-10s %4lld -> %-4lld    (unlabeled)",
                    stage, static_cast<long long>(ca),
                    static_cast<long long>(cb));
      text << buf << '\n';
    }
  }
  rep.data["rows"] = rows;
  rep.text = text.str();
  rep.csv = csv.str();
  return rep;
}

nlohmann::json evaluate_files(const std::filesystem::path& assignments_csv,
                              const std::filesystem::path& labels_csv) {
  const auto assign_lines = read_all_lines(assignments_csv);
  if (assign_lines.empty())
    throw Error(ErrorCode::MalformedLine, "empty assignments csv");
  std::vector<std::string> ids;
  std::vector<std::int32_t> raw;
  for (std::size_t i = 1; i < assign_lines.size(); ++i) {
    if (assign_lines[i].empty()) continue;
    const auto f = csv_split(assign_lines[i]);
    if (f.size() != 2)
      throw Error(ErrorCode::MalformedLine,
                  "bad assignment row: " + assign_lines[i]);
    ids.push_back(f[0]);
    raw.push_back(static_cast<std::int32_t>(std::stol(f[1])));
  }

  std::unordered_map<std::string, std::string> label_of;
  const auto label_lines = read_all_lines(labels_csv);
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    if (label_lines[i].empty()) continue;
    const auto f = csv_split(label_lines[i]);
    if (f.size() < 2)
      throw Error(ErrorCode::MalformedLine, "bad label row: " + label_lines[i]);
    if (i == 0 && f[0] == "doc_id") continue;  // optional header
    label_of[f[0]] = f[1];
  }

  ClusterAssignment assign = compact_labels(raw);
  std::vector<std::optional<std::string>> labels;
  labels.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = label_of.find(id);
    labels.push_back(it == label_of.end()
                         ? std::nullopt
                         : std::optional<std::string>(it->second));
  }
  ConfusionMatrix cm = confusion(assign, labels);
  PurityReport p = purity(cm);
  json out;
  out["documents"] = ids.size();
  out["clusters"] = assign.count;
  out["counted"] = cm.total();
  out["excluded"] = cm.excluded;
  out["purity"] = p.purity;
  out["purity_inclusive"] = p.purity_inclusive;
  json per = json::array();
  for (const auto& c : p.per_cluster)
    per.push_back({{"cluster", c.cluster},
                   {"majority_class", c.majority_class},
                   {"fraction", c.fraction}});
  out["per_cluster"] = per;
  return out;
}

}  // namespace semblur
