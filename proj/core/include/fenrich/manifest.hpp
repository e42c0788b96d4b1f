#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fenrich::pipeline {

inline constexpr const char* kManifestFile = "manifest.json";

// What one stage consumed and produced. Inputs and outputs map artifact
// names to SHA-256 hex digests; params are rendered as strings.
struct StageRecord {
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;

  bool operator==(const StageRecord&) const = default;
};

// workdir/manifest.json. Keys are written sorted and nothing
// time-dependent is stored, so identical runs give identical bytes.
class Manifest {
 public:
  // An absent file yields an empty manifest.
  static Manifest load(const std::filesystem::path& workdir);
  void save(const std::filesystem::path& workdir) const;

  const StageRecord* stage(const std::string& name) const;
  void set_stage(const std::string& name, StageRecord record) { stages_[name] = std::move(record); }
  const std::map<std::string, StageRecord>& stages() const noexcept { return stages_; }

  const std::string& corpus_hash() const noexcept { return corpus_hash_; }
  void set_corpus_hash(std::string hash) { corpus_hash_ = std::move(hash); }

  bool operator==(const Manifest&) const = default;

 private:
  std::string corpus_hash_;
  std::map<std::string, StageRecord> stages_;
};

// Stage that writes `artifact`, or nullopt for external inputs.
std::optional<std::string> producer_of(const std::string& artifact);

struct HashProblem {
  std::string artifact;
  std::string message;
};

// Checks that every named input exists in `workdir`, that its producing
// stage has a record and that the file hash matches that record. Missing
// files or records throw MissingArtifactError. Hash mismatches, including
// ancestors that were built from an older version of a file, are returned.
std::vector<HashProblem> check_inputs(const Manifest& manifest, const std::filesystem::path& workdir,
                                      const std::vector<std::string>& inputs);

}  // namespace fenrich::pipeline
