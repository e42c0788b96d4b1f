#include "fenrich/manifest.hpp"

#include <set>

#include <json.hpp>

#include "fenrich/error.hpp"
#include "fenrich/hashing.hpp"
#include "fenrich/jsonl.hpp"

namespace fenrich::pipeline {
namespace {

using nlohmann::json;

const std::map<std::string, std::string>& producers() {
  static const std::map<std::string, std::string> table = {
      {"sentences.jsonl", "ingest"},    {"reports.jsonl", "ingest"},      {"rejected.jsonl", "ingest"},
      {"embeddings.bin", "embed"},      {"clusters.jsonl", "cluster"},    {"signs.jsonl", "sign"},
      {"cooccurrence.jsonl", "graph"},  {"addability.jsonl", "graph"},    {"catalog.jsonl", "catalog"},
      {"enriched.jsonl", "enrich"},
  };
  return table;
}

std::map<std::string, std::string> string_map(const json& j) {
  std::map<std::string, std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value().get<std::string>();
  return out;
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& workdir) {
  Manifest m;
  const auto file = workdir / kManifestFile;
  if (!std::filesystem::exists(file)) return m;
  try {
    const auto j = json::parse(read_file(file));
    m.corpus_hash_ = j.value("corpus_hash", "");
    for (const auto& [name, rec] : j.at("stages").items()) {
      StageRecord r;
      r.params = string_map(rec.at("params"));
      r.inputs = string_map(rec.at("inputs"));
      r.outputs = string_map(rec.at("outputs"));
      m.stages_.emplace(name, std::move(r));
    }
  } catch (const json::exception& e) {
    throw DomainError(file.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

void Manifest::save(const std::filesystem::path& workdir) const {
  json j;
  j["corpus_hash"] = corpus_hash_;
  j["stages"] = json::object();
  for (const auto& [name, rec] : stages_) {
    j["stages"][name] = {{"params", rec.params}, {"inputs", rec.inputs}, {"outputs", rec.outputs}};
  }
  write_file_atomic(workdir / kManifestFile, j.dump(2) + "\n");
}

const StageRecord* Manifest::stage(const std::string& name) const {
  auto it = stages_.find(name);
  return it == stages_.end() ? nullptr : &it->second;
}

std::optional<std::string> producer_of(const std::string& artifact) {
  auto it = producers().find(artifact);
  if (it == producers().end()) return std::nullopt;
  return it->second;
}

std::vector<HashProblem> check_inputs(const Manifest& manifest, const std::filesystem::path& workdir,
                                      const std::vector<std::string>& inputs) {
  std::vector<HashProblem> problems;
  std::vector<std::string> frontier;
  for (const auto& name : inputs) {
    const auto stage = producer_of(name);
    if (!stage) throw DomainError("'" + name + "' is not a pipeline artifact");
    const auto file = workdir / name;
    if (!std::filesystem::exists(file)) {
      throw MissingArtifactError("missing artifact " + name + "; run '" + *stage + "' first");
    }
    const StageRecord* rec = manifest.stage(*stage);
    if (!rec || !rec->outputs.count(name)) {
      throw MissingArtifactError("manifest has no '" + *stage + "' entry for " + name + "; run '" + *stage +
                                 "' first");
    }
    if (sha256_file(file) != rec->outputs.at(name)) {
      problems.push_back({name, name + " does not match the hash recorded by '" + *stage + "'"});
    }
    frontier.push_back(*stage);
  }

  // Every upstream stage must have been built from the artifacts that are
  // current now; otherwise some stage in the chain is stale.
  std::set<std::string> seen;
  while (!frontier.empty()) {
    const std::string stage = frontier.back();
    frontier.pop_back();
    if (!seen.insert(stage).second) continue;
    const StageRecord* rec = manifest.stage(stage);
    if (!rec) continue;
    for (const auto& [artifact, hash] : rec->inputs) {
      const auto up = producer_of(artifact);
      if (!up) continue;
      const StageRecord* up_rec = manifest.stage(*up);
      if (!up_rec || !up_rec->outputs.count(artifact)) {
        throw MissingArtifactError("manifest has no '" + *up + "' entry for " + artifact);
      }
      if (up_rec->outputs.at(artifact) != hash) {
        problems.push_back({artifact, "'" + stage + "' was built from an older " + artifact + "; rerun '" + stage +
                                          "'"});
      }
      frontier.push_back(*up);
    }
  }
  return problems;
}

}  // namespace fenrich::pipeline
