#pragma once

// Drives the CLI in-process over the bundled 12-report fixture.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "fenrich/pipeline.hpp"

namespace fenrich::oracle {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult cli(std::vector<std::string> args, const std::string& stdin_text = "") {
  args.insert(args.begin(), "fenrich");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  CliResult r;
  r.code = pipeline::run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

inline std::string toy_corpus_path() { return std::string(FENRICH_FIXTURE_DIR) + "/toy_corpus.jsonl"; }

// Artifacts written by a full run, manifest included.
inline const std::vector<std::string>& toy_artifacts() {
  static const std::vector<std::string> names = {
      "sentences.jsonl", "reports.jsonl",  "rejected.jsonl",     "embeddings.bin",   "clusters.jsonl",
      "signs.jsonl",     "cooccurrence.jsonl", "addability.jsonl", "catalog.jsonl",  "enriched.jsonl",
      "manifest.json"};
  return names;
}

// Full run with the fallback embedder and fallback signing. Returns the
// first failing stage's result, or the last one.
inline CliResult run_toy_pipeline(const std::filesystem::path& workdir, const std::string& cluster_method = "hdbscan") {
  const std::string w = workdir.string();
  std::vector<std::vector<std::string>> stages = {
      {"ingest", "--workdir", w, "--corpus", toy_corpus_path()},
      {"embed", "--workdir", w, "--fallback", "--seed", "42"},
      cluster_method == "kmeans"
          ? std::vector<std::string>{"cluster", "--workdir", w, "--method", "kmeans", "--k", "8", "--seed", "42"}
          : std::vector<std::string>{"cluster", "--workdir", w, "--method", "hdbscan", "--min-cluster-size", "2"},
      {"sign", "--workdir", w, "--sign-mode", "fallback", "--seed", "42"},
      {"graph", "--workdir", w},
      {"catalog", "--workdir", w},
      {"enrich", "--workdir", w, "--seed", "42"},
  };
  CliResult r;
  for (const auto& s : stages) {
    r = cli(s);
    if (r.code != 0) return r;
  }
  return r;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fenrich::oracle
