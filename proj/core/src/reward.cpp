#include "fenrich/reward.hpp"

#include <algorithm>
#include <cctype>

#include "fenrich/error.hpp"

namespace fenrich::reward {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

ClusterSet as_set(ClusterSet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace

GenerationRecord parse_generation(std::string_view text) {
  GenerationRecord rec;
  rec.raw_text = std::string(text);
  constexpr std::string_view kThinkOpen = "<think>", kThinkClose = "</think>";
  constexpr std::string_view kAnswerOpen = "<answer>", kAnswerClose = "</answer>";

  const auto t0 = text.find(kThinkOpen);
  if (t0 == std::string_view::npos) return rec;
  const auto t1 = text.find(kThinkClose, t0 + kThinkOpen.size());
  if (t1 == std::string_view::npos) return rec;
  const auto a0 = text.find(kAnswerOpen, t1 + kThinkClose.size());
  if (a0 == std::string_view::npos) return rec;
  const auto a1 = text.find(kAnswerClose, a0 + kAnswerOpen.size());
  if (a1 == std::string_view::npos) return rec;

  const auto think_body = t0 + kThinkOpen.size();
  const auto answer_body = a0 + kAnswerOpen.size();
  rec.findings_part = std::string(trim(text.substr(think_body, t1 - think_body)));
  rec.impression_part = std::string(trim(text.substr(answer_body, a1 - answer_body)));
  rec.parse_ok = true;
  return rec;
}

std::string normalize_impression(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : trim(text)) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += ch;
  }
  return out;
}

RewardScore score(const ClusterSet& gt_clusters, const ClusterSet& gen_clusters, std::string_view gt_impression,
                  std::string_view gen_impression) {
  const ClusterSet gt = as_set(gt_clusters);
  const ClusterSet gen = as_set(gen_clusters);
  if (gt.empty()) throw DomainError("ground-truth cluster set is empty");
  ClusterSet common;
  std::set_intersection(gt.begin(), gt.end(), gen.begin(), gen.end(), std::back_inserter(common));
  RewardScore s;
  s.f1 = 2.0 * static_cast<double>(common.size()) / static_cast<double>(gt.size() + gen.size());
  s.exact = normalize_impression(gt_impression) == normalize_impression(gen_impression) ? 1 : 0;
  s.total = s.f1 + s.exact;
  return s;
}

RewardScore score_generation(const GenerationRecord& generation, const ClusterSet& gt_clusters,
                             std::string_view gt_impression) {
  if (!generation.parse_ok) {
    if (as_set(gt_clusters).empty()) throw DomainError("ground-truth cluster set is empty");
    return {};
  }
  return score(gt_clusters, generation.gen_clusters, gt_impression, generation.impression_part);
}

ClusterBridge::ClusterBridge(const corpus::SentenceTable& table, const clustering::ClusterAssignment& assignment,
                             const embedding::EmbeddingMatrix& matrix, BridgeConfig config)
    : table_(table), assignment_(assignment), matrix_(matrix), config_(config) {
  if (assignment.num_sentences() != table.size()) {
    throw DomainError("cluster labels cover " + std::to_string(assignment.num_sentences()) +
                      " sentences, sentence table has " + std::to_string(table.size()));
  }
  if (matrix.rows() != 0 && matrix.rows() != table.size()) {
    throw DomainError("embedding row count mismatch");
  }
  clustered_.resize(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    clustered_[i] = assignment.label(static_cast<SentenceId>(i)) != kNoise;
    any_clustered_ = any_clustered_ || clustered_[i];
  }
}

std::optional<ClusterId> ClusterBridge::map_sentence(const std::string& sentence,
                                                     const std::vector<float>* vec) const {
  if (auto id = table_.find(sentence)) {
    const ClusterId c = assignment_.label(*id);
    if (c == kNoise) return std::nullopt;
    return c;
  }
  if (!any_clustered_ || matrix_.rows() == 0) return std::nullopt;

  std::vector<float> query;
  if (vec) {
    if (vec->size() != matrix_.dim()) {
      throw DomainError("sentence embedding has dimension " + std::to_string(vec->size()) + ", expected " +
                        std::to_string(matrix_.dim()));
    }
    // Route through EmbeddingMatrix for the same normalization as the corpus.
    query = embedding::EmbeddingMatrix(matrix_.dim(), *vec).data();
  } else if (config_.embedder == EmbedderKind::kFallback) {
    query = embedding::fallback_embed(sentence, matrix_.dim(), config_.embed_seed);
  } else {
    return std::nullopt;
  }
  const auto nn = embedding::nearest_clustered_sentence(query, matrix_, clustered_);
  if (nn.cosine < config_.sim_threshold) return std::nullopt;
  return assignment_.label(nn.id);
}

ClusterSet ClusterBridge::map(std::string_view findings_part, const std::vector<std::vector<float>>* embeddings) const {
  const auto sentences = corpus::split_sentences(findings_part);
  if (embeddings && embeddings->size() != sentences.size()) {
    throw DomainError("got " + std::to_string(embeddings->size()) + " sentence embeddings for " +
                      std::to_string(sentences.size()) + " generated sentences");
  }
  ClusterSet out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (auto c = map_sentence(sentences[i], embeddings ? &(*embeddings)[i] : nullptr)) out.push_back(*c);
  }
  return as_set(std::move(out));
}

ClusterSet map_generation_to_clusters(std::string_view findings_part, const corpus::SentenceTable& table,
                                      const clustering::ClusterAssignment& assignment,
                                      const embedding::EmbeddingMatrix& matrix, const BridgeConfig& config) {
  return ClusterBridge(table, assignment, matrix, config).map(findings_part);
}

}  // namespace fenrich::reward
