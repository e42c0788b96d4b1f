#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fenrich/clustering.hpp"
#include "fenrich/corpus.hpp"
#include "fenrich/embedding.hpp"
#include "fenrich/types.hpp"

namespace fenrich::reward {

struct GenerationRecord {
  std::string raw_text;
  std::string findings_part;
  std::string impression_part;
  ClusterSet gen_clusters;
  bool parse_ok = false;
};

struct RewardScore {
  double f1 = 0.0;
  int exact = 0;
  double total = 0.0;

  bool operator==(const RewardScore&) const = default;
};

// First <think>...</think> span, then the first <answer>...</answer> after
// it; both trimmed. Missing or unterminated tags give parse_ok = false with
// both parts empty.
GenerationRecord parse_generation(std::string_view text);

// Collapses whitespace runs and trims; case is kept.
std::string normalize_impression(std::string_view text);

// f1 = 2|gt n gen| / (|gt| + |gen|), exact = [impressions equal after
// normalize_impression], total = f1 + exact. Inputs are treated as sets.
// Throws DomainError on an empty gt set.
RewardScore score(const ClusterSet& gt_clusters, const ClusterSet& gen_clusters, std::string_view gt_impression,
                  std::string_view gen_impression);

// As score(), but an unparsed generation scores zero.
RewardScore score_generation(const GenerationRecord& generation, const ClusterSet& gt_clusters,
                             std::string_view gt_impression);

enum class EmbedderKind {
  kFallback,  // generated sentences are embedded with fallback_embed
  kExternal,  // vectors must come with the request, else exact match only
};

struct BridgeConfig {
  double sim_threshold = 0.8;
  EmbedderKind embedder = EmbedderKind::kFallback;
  std::uint64_t embed_seed = 0;  // seed the corpus was embedded with
};

// Maps generated sentences onto training clusters: an exact normalized match
// takes that sentence's label; otherwise the nearest clustered training
// sentence lends its cluster if the cosine reaches sim_threshold.
class ClusterBridge {
 public:
  ClusterBridge(const corpus::SentenceTable& table, const clustering::ClusterAssignment& assignment,
                const embedding::EmbeddingMatrix& matrix, BridgeConfig config);

  // `embeddings`, when given, holds one vector per split sentence of
  // findings_part and overrides the configured embedder.
  ClusterSet map(std::string_view findings_part,
                 const std::vector<std::vector<float>>* embeddings = nullptr) const;

  const BridgeConfig& config() const noexcept { return config_; }

 private:
  std::optional<ClusterId> map_sentence(const std::string& sentence, const std::vector<float>* vec) const;

  const corpus::SentenceTable& table_;
  const clustering::ClusterAssignment& assignment_;
  const embedding::EmbeddingMatrix& matrix_;
  BridgeConfig config_;
  std::vector<bool> clustered_;
  bool any_clustered_ = false;
};

ClusterSet map_generation_to_clusters(std::string_view findings_part, const corpus::SentenceTable& table,
                                      const clustering::ClusterAssignment& assignment,
                                      const embedding::EmbeddingMatrix& matrix, const BridgeConfig& config);

}  // namespace fenrich::reward
