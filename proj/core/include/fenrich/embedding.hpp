#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fenrich/corpus.hpp"
#include "fenrich/types.hpp"

namespace fenrich::embedding {

inline constexpr std::size_t kDefaultDim = 384;

// Row-major matrix of unit-length sentence vectors; row i belongs to
// SentenceId i. Rows are normalized on construction, so magnitudes of the
// raw input are discarded; rows within dim * FLT_EPSILON of unit squared
// norm are kept verbatim.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws DomainError naming the row if a row is zero or non-finite.
  EmbeddingMatrix(std::size_t dim, std::vector<float> raw_rows);

  std::size_t rows() const noexcept { return dim_ ? data_.size() / dim_ : 0; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<float>& data() const noexcept { return data_; }

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

double dot(std::span<const float> a, std::span<const float> b);
double squared_distance(std::span<const float> a, std::span<const float> b);

// Binary layout: u32 row count, u32 dim, then rows*dim float32 values,
// all little-endian, row-major.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const corpus::SentenceTable& table);
// One JSON array of numbers per line, or an object {"sentence_id", "embedding"}.
EmbeddingMatrix load_embeddings_jsonl(const std::filesystem::path& path,
                                      const corpus::SentenceTable& table);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

// Deterministic offline encoder: signed feature hashing of word unigrams,
// word bigrams and character trigrams of the normalized sentence, then unit
// normalization. Similar token sets give high cosine similarity.
std::vector<float> fallback_embed(std::string_view sentence, std::size_t dim, std::uint64_t seed);

EmbeddingMatrix embed_table_fallback(const corpus::SentenceTable& table, std::size_t dim,
                                     std::uint64_t seed);

struct Neighbor {
  SentenceId id = 0;
  double cosine = 0.0;
};

// Masked row with maximal dot product against `query`; ties go to the
// smallest id. Throws DomainError on an empty mask.
Neighbor nearest_clustered_sentence(std::span<const float> query, const EmbeddingMatrix& matrix,
                                    const std::vector<bool>& clustered_mask);

}  // namespace fenrich::embedding
