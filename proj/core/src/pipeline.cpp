#include "fenrich/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <iostream>
#include <optional>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "fenrich/clustering.hpp"
#include "fenrich/corpus.hpp"
#include "fenrich/embedding.hpp"
#include "fenrich/enrichment.hpp"
#include "fenrich/error.hpp"
#include "fenrich/graph.hpp"
#include "fenrich/hashing.hpp"
#include "fenrich/jsonl.hpp"
#include "fenrich/manifest.hpp"
#include "fenrich/random.hpp"
#include "fenrich/reward.hpp"
#include "fenrich/signing.hpp"

namespace fenrich::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSentences = "sentences.jsonl";
constexpr const char* kReports = "reports.jsonl";
constexpr const char* kRejected = "rejected.jsonl";
constexpr const char* kEmbeddings = "embeddings.bin";
constexpr const char* kClusters = "clusters.jsonl";
constexpr const char* kSigns = "signs.jsonl";
constexpr const char* kSignCache = "signs_cache.jsonl";
constexpr const char* kCooccurrence = "cooccurrence.jsonl";
constexpr const char* kAddability = "addability.jsonl";
constexpr const char* kCatalog = "catalog.jsonl";
constexpr const char* kEnriched = "enriched.jsonl";

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(std::uint64_t v) { return std::to_string(v); }

// Exclusive advisory lock on workdir/.fenrich.lock for the life of a stage.
class WorkdirLock {
 public:
  explicit WorkdirLock(const fs::path& workdir) {
    const auto file = workdir / ".fenrich.lock";
    fd_ = ::open(file.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw DomainError("cannot open " + file.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw DomainError("working directory " + workdir.string() + " is in use by another fenrich process");
    }
  }
  ~WorkdirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  int fd_ = -1;
};

struct Common {
  std::string workdir;
  bool force = false;
};

// One stage invocation: validates inputs against the manifest, then records
// parameters and hashes once outputs are written.
class Stage {
 public:
  Stage(std::string name, const Common& common, std::ostream& err, bool create_workdir = false, bool lock = true)
      : name_(std::move(name)), dir_(common.workdir), force_(common.force), err_(err) {
    if (create_workdir) {
      fs::create_directories(dir_);
    } else if (!fs::is_directory(dir_)) {
      throw MissingArtifactError("working directory " + dir_.string() + " does not exist; run 'ingest' first");
    }
    if (lock) lock_.emplace(dir_);
    manifest_ = Manifest::load(dir_);
  }

  void require(const std::vector<std::string>& inputs) {
    const auto problems = check_inputs(manifest_, dir_, inputs);
    if (!problems.empty()) {
      std::string msg;
      for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p.message;
      if (!force_) throw HashMismatchError(msg + " (use --force to override)");
      err_ << json{{"warning", {{"stage", name_}, {"message", msg}}}}.dump() << '\n';
    }
    for (const auto& f : inputs) record_.inputs[f] = sha256_file(path(f));
  }

  fs::path path(const std::string& artifact) const { return dir_ / artifact; }
  Manifest& manifest() { return manifest_; }
  StageRecord& record() { return record_; }

  void finish(const std::vector<std::string>& outputs) {
    for (const auto& f : outputs) record_.outputs[f] = sha256_file(path(f));
    manifest_.set_stage(name_, record_);
    manifest_.save(dir_);
  }

 private:
  std::string name_;
  fs::path dir_;
  bool force_;
  std::ostream& err_;
  std::optional<WorkdirLock> lock_;
  Manifest manifest_;
  StageRecord record_;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--workdir", c.workdir, "Directory holding the pipeline artifacts")->required();
  cmd->add_flag("--force", c.force, "Run despite upstream hash mismatches");
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  Common common;
  std::string corpus;
  std::string on_error = "skip";
};

void cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("ingest", a.common, err, true);
  corpus::IngestOptions opts;
  opts.on_error = a.on_error == "abort" ? corpus::OnRecordError::kAbort : corpus::OnRecordError::kSkip;
  if (!fs::exists(a.corpus)) throw MissingArtifactError("corpus file " + a.corpus + " not found");
  const auto c = corpus::ingest_corpus(a.corpus, opts);
  if (c.reports.empty()) throw DomainError("corpus has no usable reports");
  corpus::save_corpus(c, a.common.workdir);

  AtomicFileWriter w(st.path(kRejected));
  for (const auto& d : c.rejected) {
    w.stream() << json{{"line", d.line}, {"report_id", d.report_id}, {"message", d.message}}.dump() << '\n';
  }
  w.commit();

  const std::string corpus_hash = sha256_file(a.corpus);
  st.manifest().set_corpus_hash(corpus_hash);
  st.record().params = {{"on_error", a.on_error}};
  st.record().inputs = {{"corpus", corpus_hash}};
  st.finish({kSentences, kReports, kRejected});
  out << json{{"reports", c.reports.size()}, {"sentences", c.table.size()}, {"rejected", c.rejected.size()}}.dump()
      << '\n';
}

// ---- embed ----------------------------------------------------------------

struct EmbedArgs {
  Common common;
  std::string input;
  std::string input_format = "bin";
  std::size_t dim = embedding::kDefaultDim;
  std::uint64_t seed = 42;
};

void cmd_embed(const EmbedArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("embed", a.common, err);
  st.require({kSentences});
  const auto table = corpus::load_sentence_table(st.path(kSentences));
  embedding::EmbeddingMatrix matrix;
  if (!a.input.empty()) {
    if (!fs::exists(a.input)) throw MissingArtifactError("embedding file " + a.input + " not found");
    matrix = a.input_format == "jsonl" ? embedding::load_embeddings_jsonl(a.input, table)
                                       : embedding::load_embeddings(a.input, table);
    st.record().params = {{"source", "external"}, {"input_format", a.input_format}};
    st.record().inputs["embeddings_source"] = sha256_file(a.input);
  } else {
    matrix = embedding::embed_table_fallback(table, a.dim, a.seed);
    st.record().params = {{"source", "fallback"}, {"dim", num(a.dim)}, {"seed", num(a.seed)}};
  }
  embedding::save_embeddings(matrix, st.path(kEmbeddings));
  st.finish({kEmbeddings});
  out << json{{"rows", matrix.rows()}, {"dim", matrix.dim()}}.dump() << '\n';
}

// ---- cluster --------------------------------------------------------------

struct ClusterArgs {
  Common common;
  std::string method = "hdbscan";
  std::size_t k = 0;
  double eps = 0.35;
  std::size_t min_pts = 5;
  std::size_t min_cluster_size = 5;
  std::uint64_t seed = 42;
  std::size_t max_iter = 300;
};

void cmd_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("cluster", a.common, err);
  st.require({kSentences, kEmbeddings});
  const auto table = corpus::load_sentence_table(st.path(kSentences));
  const auto matrix = embedding::load_embeddings(st.path(kEmbeddings), table);

  clustering::MethodParams p;
  p.method = clustering::parse_method(a.method);
  auto& params = st.record().params;
  params["method"] = clustering::to_string(p.method);
  switch (p.method) {
    case clustering::Method::kKMeans:
      if (a.k == 0) throw DomainError("--k is required for kmeans");
      p.k = a.k;
      p.seed = a.seed;
      p.max_iter = a.max_iter;
      params["k"] = num(a.k);
      params["seed"] = num(a.seed);
      params["max_iter"] = num(a.max_iter);
      break;
    case clustering::Method::kDbscan:
      p.eps = a.eps;
      p.min_pts = a.min_pts;
      params["eps"] = num(a.eps);
      params["min_pts"] = num(a.min_pts);
      break;
    case clustering::Method::kHdbscan:
      p.min_cluster_size = a.min_cluster_size;
      params["min_cluster_size"] = num(a.min_cluster_size);
      break;
  }
  const auto assignment = clustering::run(matrix, p);
  clustering::save_clusters(assignment, st.path(kClusters));
  st.finish({kClusters});
  out << json{{"clusters", assignment.num_clusters()}, {"noise", assignment.num_noise()},
              {"sentences", assignment.num_sentences()}}
             .dump()
      << '\n';
}

// ---- sign -----------------------------------------------------------------

struct SignArgs {
  Common common;
  std::string mode = "fallback";
  std::uint64_t seed = 42;
  std::string on_failure = "negative";
};

void cmd_sign(const SignArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("sign", a.common, err);
  st.require({kSentences, kClusters});
  const auto table = corpus::load_sentence_table(st.path(kSentences));
  const auto assignment = clustering::load_clusters(st.path(kClusters));
  if (assignment.num_sentences() != table.size()) throw DomainError("clusters.jsonl does not cover every sentence");

  signing::SignOptions opts;
  opts.seed = a.seed;
  opts.on_failure = a.on_failure == "negative" ? signing::OnFailure::kNegative : signing::OnFailure::kAbort;
  st.record().params = {{"sign_mode", a.mode}, {"seed", num(a.seed)}, {"on_failure", a.on_failure}};

  signing::SignMap signs;
  std::size_t calls = 0;
  if (a.mode == "llm") {
    auto config = signing::LlmConfig::from_env();
    signing::ResponseCache cache(st.path(kSignCache));
    signing::LlmClassifier client(signing::make_http_transport(config), config, &cache);
    opts.mode = signing::Mode::kLlm;
    opts.llm = &client;
    st.record().params["model"] = config.model;
    try {
      signs = signing::sign_all_clusters(assignment, table, opts);
    } catch (...) {
      cache.save();  // keep the answers already paid for
      throw;
    }
    cache.save();
    calls = client.network_calls();
  } else {
    opts.mode = signing::Mode::kFallback;
    signs = signing::sign_all_clusters(assignment, table, opts);
  }
  signing::save_signs(signs, st.path(kSigns));
  st.finish({kSigns});

  std::size_t positive = 0;
  std::vector<std::size_t> defaulted;
  for (std::size_t c = 0; c < signs.size(); ++c) {
    positive += signs.positive(static_cast<ClusterId>(c));
    if (signs.provenance[c] == signing::Provenance::kFailureDefault) defaulted.push_back(c);
  }
  if (!defaulted.empty()) {
    err << json{{"warning",
                 {{"stage", "sign"},
                  {"message", "classification failed; clusters set to -1"},
                  {"clusters", defaulted}}}}
               .dump()
        << '\n';
  }
  out << json{{"clusters", signs.size()}, {"positive", positive}, {"negative", signs.size() - positive},
              {"failure_default", defaulted.size()}, {"network_calls", calls}}
             .dump()
      << '\n';
}

// ---- graph ----------------------------------------------------------------

struct GraphArgs {
  Common common;
  double tau_norm = 0.0;
  std::uint32_t tau_count = 0;
};

void cmd_graph(const GraphArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("graph", a.common, err);
  st.require({kReports, kClusters, kSigns});
  const auto reports = corpus::load_reports(st.path(kReports));
  const auto assignment = clustering::load_clusters(st.path(kClusters));
  const auto signs = signing::load_signs(st.path(kSigns));
  if (signs.size() != assignment.num_clusters()) throw DomainError("signs.jsonl does not match clusters.jsonl");

  const auto counts = graph::build_cooccurrence(reports, assignment);
  const auto bits = graph::build_addability(counts, signs, a.tau_norm, a.tau_count);
  graph::save_cooccurrence(counts, st.path(kCooccurrence), st.manifest().corpus_hash());
  graph::save_addability(bits, st.path(kAddability), st.manifest().corpus_hash());
  st.record().params = {{"tau_norm", num(a.tau_norm)}, {"tau_count", num(std::uint64_t{a.tau_count})}};
  st.finish({kCooccurrence, kAddability});
  out << json{{"clusters", bits.size()}, {"addable_pairs", bits.num_set()}}.dump() << '\n';
}

// ---- catalog --------------------------------------------------------------

struct CatalogArgs {
  Common common;
  bool strict = false;
  std::size_t max_candidates = enrichment::kMaxCandidateBound;
  std::string enumerator = "bron-kerbosch";
};

void cmd_catalog(const CatalogArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("catalog", a.common, err);
  st.require({kReports, kClusters, kSigns, kAddability});
  const auto reports = corpus::load_reports(st.path(kReports));
  const auto assignment = clustering::load_clusters(st.path(kClusters));
  const auto signs = signing::load_signs(st.path(kSigns));
  const auto bits = graph::load_addability(st.path(kAddability));
  if (bits.size() != assignment.num_clusters()) throw DomainError("addability.jsonl does not match clusters.jsonl");

  enrichment::EnumerationOptions opts;
  opts.compatibility =
      a.strict ? enrichment::Compatibility::kStrictAlgorithm1 : enrichment::Compatibility::kSymmetric;
  opts.enumerator = a.enumerator == "expand" ? enrichment::Enumerator::kExpandPrune
                                             : enrichment::Enumerator::kBronKerbosch;
  opts.max_candidates = a.max_candidates;
  const auto catalog = enrichment::build_catalog(reports, assignment, bits, signs, opts);
  enrichment::save_catalog(catalog, st.path(kCatalog));
  // The enumerator does not change the output, so it is not a parameter.
  st.record().params = {{"strict_algorithm1", a.strict ? "true" : "false"},
                        {"max_candidates", num(a.max_candidates)}};
  st.finish({kCatalog});

  std::size_t total = 0, largest = 0, trivial = 0;
  for (const auto& [_, e] : catalog.entries()) {
    total += e.size();
    largest = std::max(largest, e.size());
    trivial += e.size() == 1 && e.front().empty();
  }
  out << json{{"finding_sets", catalog.size()}, {"expansions", total}, {"max_expansions", largest},
              {"no_enrichment", trivial}}
             .dump()
      << '\n';
}

// ---- enrich ---------------------------------------------------------------

struct EnrichArgs {
  Common common;
  std::uint64_t seed = 42;
  std::uint64_t epoch = 0;
};

void cmd_enrich(const EnrichArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("enrich", a.common, err);
  st.require({kReports, kSentences, kClusters, kCatalog});
  const auto reports = corpus::load_reports(st.path(kReports));
  const auto table = corpus::load_sentence_table(st.path(kSentences));
  const auto assignment = clustering::load_clusters(st.path(kClusters));
  const auto catalog = enrichment::load_catalog(st.path(kCatalog));
  const auto sets = graph::report_cluster_sets(reports, assignment);

  const std::uint64_t draw_seed = derive_seed(a.seed, 2 * a.epoch);
  const std::uint64_t render_seed = derive_seed(a.seed, 2 * a.epoch + 1);
  std::size_t enriched = 0;
  AtomicFileWriter w(st.path(kEnriched));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    enrichment::ExpansionSet e;
    if (!sets[i].empty()) e = enrichment::sample_enrichment(catalog, enrichment::FindingSet(sets[i]), draw_seed, i);
    enriched += !e.empty();
    const auto text = enrichment::render_enriched(reports[i], e, assignment, table, derive_seed(render_seed, i));
    w.stream() << json{{"report_id", reports[i].report_id},
                       {"findings", text},
                       {"impression", reports[i].impression_text},
                       {"expansion_cluster_ids", e}}
                      .dump()
               << '\n';
  }
  w.commit();
  st.record().params = {{"seed", num(a.seed)}, {"epoch", num(a.epoch)}};
  st.finish({kEnriched});
  out << json{{"reports", reports.size()}, {"enriched", enriched}}.dump() << '\n';
}

// ---- reward ---------------------------------------------------------------

struct RewardArgs {
  Common common;
  std::string generations;
  std::string output;
  bool stream = false;
  double sim_threshold = 0.8;
};

struct GroundTruth {
  ClusterSet clusters;
  std::string impression;
};

class RewardContext {
 public:
  RewardContext(Stage& st, const Manifest& manifest, double sim_threshold)
      : table_(corpus::load_sentence_table(st.path(kSentences))),
        assignment_(clustering::load_clusters(st.path(kClusters))),
        matrix_(embedding::load_embeddings(st.path(kEmbeddings), table_)),
        bridge_(table_, assignment_, matrix_, bridge_config(manifest, sim_threshold)) {
    const auto reports = corpus::load_reports(st.path(kReports));
    const auto sets = graph::report_cluster_sets(reports, assignment_);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      truth_[reports[i].report_id] = {sets[i], reports[i].impression_text};
    }
  }

  json score_line(std::string_view line) const {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      return {{"report_id", nullptr}, {"error", std::string("malformed record: ") + e.what()}};
    }
    const json id = rec.contains("report_id") ? rec["report_id"] : json(nullptr);
    try {
      const auto report_id = rec.at("report_id").get<std::string>();
      auto it = truth_.find(report_id);
      if (it == truth_.end()) throw DomainError("unknown report_id");
      auto gen = reward::parse_generation(rec.at("text").get<std::string>());
      if (gen.parse_ok) {
        std::optional<std::vector<std::vector<float>>> vecs;
        if (rec.contains("sentence_embeddings")) {
          vecs = rec["sentence_embeddings"].get<std::vector<std::vector<float>>>();
        }
        gen.gen_clusters = bridge_.map(gen.findings_part, vecs ? &*vecs : nullptr);
      }
      const auto s = reward::score_generation(gen, it->second.clusters, it->second.impression);
      return {{"report_id", report_id}, {"f1", s.f1}, {"exact", s.exact}, {"total", s.total}};
    } catch (const std::exception& e) {
      return {{"report_id", id}, {"error", e.what()}};
    }
  }

 private:
  static reward::BridgeConfig bridge_config(const Manifest& manifest, double sim_threshold) {
    reward::BridgeConfig c;
    c.sim_threshold = sim_threshold;
    const StageRecord* embed = manifest.stage("embed");
    const bool fallback = embed && embed->params.count("source") && embed->params.at("source") == "fallback";
    c.embedder = fallback ? reward::EmbedderKind::kFallback : reward::EmbedderKind::kExternal;
    if (fallback) c.embed_seed = std::stoull(embed->params.at("seed"));
    return c;
  }

  corpus::SentenceTable table_;
  clustering::ClusterAssignment assignment_;
  embedding::EmbeddingMatrix matrix_;
  reward::ClusterBridge bridge_;
  std::unordered_map<std::string, GroundTruth> truth_;
};

void cmd_reward(const RewardArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  if (!a.stream && a.generations.empty()) throw DomainError("reward needs --generations or --stream");
  // Streaming runs alongside a trainer for a long time and writes nothing
  // into the workdir, so it does not hold the lock.
  Stage st("reward", a.common, err, false, !a.stream);
  st.require({kSentences, kReports, kClusters, kEmbeddings});
  const RewardContext ctx(st, st.manifest(), a.sim_threshold);

  if (a.stream) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out << ctx.score_line(line).dump() << '\n' << std::flush;
    }
    return;
  }

  const fs::path output = a.output.empty() ? st.path("rewards.jsonl") : fs::path(a.output);
  std::size_t scored = 0, failed = 0;
  AtomicFileWriter w(output);
  for_each_line(a.generations, [&](std::size_t, std::string_view line) {
    const auto rec = ctx.score_line(line);
    (rec.contains("error") ? failed : scored) += 1;
    w.stream() << rec.dump() << '\n';
  });
  w.commit();
  st.record().params = {{"sim_threshold", num(a.sim_threshold)}};
  st.record().inputs["generations"] = sha256_file(a.generations);
  st.record().outputs["rewards"] = sha256_file(output);
  st.finish({});
  out << json{{"scored", scored}, {"errors", failed}}.dump() << '\n';
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  Common common;
  bool as_json = false;
};

void cmd_stats(const StatsArgs& a, std::ostream& out, std::ostream& err) {
  Stage st("stats", a.common, err, false, false);
  st.require({kClusters});
  const auto s = clustering::compute_stats(clustering::load_clusters(st.path(kClusters)));
  if (a.as_json) {
    out << json{{"total_sentences", s.total_sentences_clustered}, {"total_clusters", s.total_clusters},
                {"mean_size", s.mean_size},  {"median_size", s.median_size},
                {"min_size", s.min_size},     {"max_size", s.max_size}}
               .dump()
        << '\n';
  } else {
    out << clustering::format_stats_table(s);
  }
}

void report_error(std::ostream& err, int code, const std::string& kind, const std::string& command,
                  const std::string& message) {
  err << json{{"error", {{"exit_code", code}, {"kind", kind}, {"command", command}, {"message", message}}}}.dump()
      << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cluster-based findings enrichment pipeline", "fenrich"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Split report findings into a deduplicated sentence table");
  add_common(c_ingest, ingest.common);
  c_ingest->add_option("--corpus", ingest.corpus, "JSON-lines corpus {report_id, findings, impression}")
      ->required();
  c_ingest->add_option("--on-error", ingest.on_error, "Malformed records: skip or abort")
      ->check(CLI::IsMember({"skip", "abort"}));

  EmbedArgs embed;
  auto* c_embed = app.add_subcommand("embed", "Load sentence embeddings or compute fallback ones");
  add_common(c_embed, embed.common);
  auto* o_input = c_embed->add_option("--input", embed.input, "Precomputed embeddings, one row per sentence");
  c_embed->add_option("--input-format", embed.input_format, "bin or jsonl")
      ->check(CLI::IsMember({"bin", "jsonl"}))
      ->needs(o_input);
  c_embed->add_flag("--fallback", "Use the built-in hashing encoder (default without --input)")->excludes(o_input);
  c_embed->add_option("--dim", embed.dim, "Fallback embedding dimension")->check(CLI::Range(2, 1 << 16));
  c_embed->add_option("--seed", embed.seed, "Fallback hashing seed");

  ClusterArgs cluster;
  auto* c_cluster = app.add_subcommand("cluster", "Cluster sentence embeddings");
  add_common(c_cluster, cluster.common);
  c_cluster->add_option("--method", cluster.method, "kmeans, dbscan or hdbscan")
      ->check(CLI::IsMember({"kmeans", "dbscan", "hdbscan"}));
  c_cluster->add_option("--k", cluster.k, "Number of k-means clusters");
  c_cluster->add_option("--eps", cluster.eps, "DBSCAN neighbourhood radius (Euclidean, unit vectors)")
      ->check(CLI::PositiveNumber);
  c_cluster->add_option("--min-pts", cluster.min_pts, "DBSCAN core-point threshold")->check(CLI::PositiveNumber);
  c_cluster->add_option("--min-cluster-size", cluster.min_cluster_size, "HDBSCAN minimum cluster size")
      ->check(CLI::Range(2, 1 << 30));
  c_cluster->add_option("--seed", cluster.seed, "k-means seed");
  c_cluster->add_option("--max-iter", cluster.max_iter, "k-means iteration cap")->check(CLI::PositiveNumber);

  SignArgs sign;
  auto* c_sign = app.add_subcommand("sign", "Label each cluster positive (normal) or negative");
  add_common(c_sign, sign.common);
  c_sign->add_option("--sign-mode", sign.mode, "llm or fallback")->check(CLI::IsMember({"llm", "fallback"}));
  c_sign->add_option("--seed", sign.seed, "Representative-sentence seed");
  c_sign->add_option("--on-sign-failure", sign.on_failure,
                     "negative (default) marks an unclassifiable cluster -1; abort stops")
      ->check(CLI::IsMember({"abort", "negative"}));

  GraphArgs graph_args;
  auto* c_graph = app.add_subcommand("graph", "Build co-occurrence and addability matrices");
  add_common(c_graph, graph_args.common);
  c_graph->add_option("--tau-norm", graph_args.tau_norm, "Row-normalized co-occurrence threshold")
      ->check(CLI::Range(0.0, 1.0));
  c_graph->add_option("--tau-count", graph_args.tau_count, "Raw co-occurrence count threshold");

  CatalogArgs catalog;
  auto* c_catalog = app.add_subcommand("catalog", "Enumerate all largest valid enrichments");
  add_common(c_catalog, catalog.common);
  c_catalog->add_flag("--strict-algorithm1", catalog.strict, "One-directional compatibility check");
  c_catalog->add_option("--max-candidates", catalog.max_candidates, "Refuse finding sets with more candidates")
      ->check(CLI::Range(std::size_t{1}, enrichment::kMaxCandidateBound));
  c_catalog->add_option("--enumerator", catalog.enumerator, "bron-kerbosch or expand")
      ->check(CLI::IsMember({"bron-kerbosch", "expand"}));

  EnrichArgs enrich;
  auto* c_enrich = app.add_subcommand("enrich", "Sample one enrichment per report and render it");
  add_common(c_enrich, enrich.common);
  c_enrich->add_option("--seed", enrich.seed, "Sampling seed");
  c_enrich->add_option("--epoch", enrich.epoch, "Draw round; each epoch resamples every report");

  RewardArgs reward_args;
  auto* c_reward = app.add_subcommand("reward", "Score generated reports");
  add_common(c_reward, reward_args.common);
  auto* o_gen = c_reward->add_option("--generations", reward_args.generations, "JSON-lines {report_id, text}");
  c_reward->add_option("--output", reward_args.output, "Rewards file (default <workdir>/rewards.jsonl)")
      ->needs(o_gen);
  c_reward->add_flag("--stream", reward_args.stream, "Score records from stdin, one result per line")
      ->excludes(o_gen);
  c_reward->add_option("--sim-threshold", reward_args.sim_threshold, "Cosine needed to adopt a neighbour's cluster")
      ->check(CLI::Range(-1.0, 1.0));

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Print cluster size statistics");
  add_common(c_stats, stats.common);
  c_stats->add_flag("--json", stats.as_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    report_error(err, kExitDomain, "usage", "", e.what());
    return kExitDomain;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    if (cmd == c_ingest) cmd_ingest(ingest, out, err);
    else if (cmd == c_embed) cmd_embed(embed, out, err);
    else if (cmd == c_cluster) cmd_cluster(cluster, out, err);
    else if (cmd == c_sign) cmd_sign(sign, out, err);
    else if (cmd == c_graph) cmd_graph(graph_args, out, err);
    else if (cmd == c_catalog) cmd_catalog(catalog, out, err);
    else if (cmd == c_enrich) cmd_enrich(enrich, out, err);
    else if (cmd == c_reward) cmd_reward(reward_args, in, out, err);
    else if (cmd == c_stats) cmd_stats(stats, out, err);
  } catch (const MissingArtifactError& e) {
    report_error(err, kExitMissing, "missing_artifact", name, e.what());
    return kExitMissing;
  } catch (const HashMismatchError& e) {
    report_error(err, kExitHashMismatch, "hash_mismatch", name, e.what());
    return kExitHashMismatch;
  } catch (const std::exception& e) {
    report_error(err, kExitDomain, "domain", name, e.what());
    return kExitDomain;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cin, std::cout, std::cerr); }

}  // namespace fenrich::pipeline
