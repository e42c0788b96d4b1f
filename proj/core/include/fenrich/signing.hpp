#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fenrich/clustering.hpp"
#include "fenrich/corpus.hpp"
#include "fenrich/error.hpp"
#include "fenrich/types.hpp"

namespace fenrich::signing {

// kFailureDefault: the classifier gave no answer and the cluster was set to -1.
enum class Provenance { kLlm, kFallback, kManual, kFailureDefault };

std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& name);

// Per-cluster sign with the sentence it was decided from.
struct SignMap {
  std::vector<Sign> signs;
  std::vector<Provenance> provenance;
  std::vector<SentenceId> representative;

  std::size_t size() const noexcept { return signs.size(); }
  Sign sign(ClusterId c) const { return signs.at(static_cast<std::size_t>(c)); }
  bool positive(ClusterId c) const { return sign(c) == Sign::kPositive; }

  bool operator==(const SignMap&) const = default;
};

// One uniformly drawn member per cluster; cluster c uses the stream seeded
// with seed ^ c.
std::vector<SentenceId> pick_representative(const clustering::ClusterAssignment& assignment,
                                            std::uint64_t seed);

// Rule cascade: normal-finding cues give +1 unless some pathology term is
// left un-negated; an un-negated pathology term gives -1; anything else -1.
Sign classify_sign_fallback(std::string_view sentence);

// The classification prompt with {finding} substituted.
std::string build_prompt(std::string_view finding);

// Drops any <think>...</think> preamble and returns the sign of the last
// "positive"/"negative" token (case-insensitive), if any.
std::optional<Sign> parse_sign_response(std::string_view response);

// ---- LLM client -----------------------------------------------------------

class TransportError : public Error {
 public:
  using Error::Error;
};

// Raised when no attempt produced a parsable answer.
class SignError : public DomainError {
 public:
  SignError(const std::string& what, std::string raw_response)
      : DomainError(what), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

struct LlmConfig {
  std::string url;  // full chat-completions endpoint
  std::string api_key;
  std::string model = "deepseek-r1";
  double temperature = 0.0;
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
  std::size_t max_in_flight = 4;

  // FENRICH_LLM_URL, FENRICH_LLM_API_KEY, FENRICH_LLM_MODEL.
  static LlmConfig from_env();
};

// Sends a prompt and returns the model's text reply; throws TransportError.
using Transport = std::function<std::string(const std::string& prompt)>;

// Chat-completion request over HTTP(S): {"model", "temperature",
// "messages": [{"role": "user", "content": prompt}]}, bearer auth.
Transport make_http_transport(const LlmConfig& config);

// Request body used by the HTTP transport.
std::string chat_request_body(const LlmConfig& config, const std::string& prompt);
// Extracts choices[0].message.content from a chat-completion response.
std::string chat_response_text(std::string_view body);

// Prompt-hash keyed response cache, safe for concurrent use. The file is
// rewritten sorted by key on save(), so its bytes do not depend on the
// order in which responses arrived.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  std::optional<std::string> get(const std::string& prompt_sha256) const;
  void put(const std::string& prompt_sha256, const std::string& response);
  void save() const;
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> entries_;
};

class LlmClassifier {
 public:
  LlmClassifier(Transport transport, LlmConfig config, ResponseCache* cache = nullptr);

  // Cached answers short-circuit the network. Parse failures are retried up
  // to max_attempts; transport failures back off exponentially.
  Sign classify(std::string_view sentence);

  std::size_t network_calls() const noexcept { return calls_.load(); }
  const LlmConfig& config() const noexcept { return config_; }

 private:
  Transport transport_;
  LlmConfig config_;
  ResponseCache* cache_;
  std::atomic<std::size_t> calls_{0};
};

Sign classify_sign_llm(std::string_view sentence, LlmClassifier& client);

// ---- whole-assignment signing --------------------------------------------

enum class Mode { kLlm, kFallback };
enum class OnFailure { kAbort, kNegative };

struct SignOptions {
  Mode mode = Mode::kFallback;
  std::uint64_t seed = 0;
  OnFailure on_failure = OnFailure::kAbort;
  LlmClassifier* llm = nullptr;  // required in kLlm mode
};

// Signs every cluster from its representative. Classifier errors are
// rethrown with the cluster id, unless on_failure is kNegative, in which case
// the cluster gets -1 with provenance kFailureDefault.
SignMap sign_all_clusters(const clustering::ClusterAssignment& assignment, const corpus::SentenceTable& table,
                          const SignOptions& options);

// signs.jsonl: {cluster_id, sign, provenance, representative_sentence_id}.
void save_signs(const SignMap& signs, const std::filesystem::path& path);
SignMap load_signs(const std::filesystem::path& path);

}  // namespace fenrich::signing
