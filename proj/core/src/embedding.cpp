#include "fenrich/embedding.hpp"

#include <bit>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fenrich/error.hpp"
#include "fenrich/jsonl.hpp"
#include "fenrich/random.hpp"

namespace fenrich::embedding {
namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return to_little(v);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

float read_f32(std::istream& in) {
  return std::bit_cast<float>(read_u32(in));
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

void check_row_count(std::size_t rows, const corpus::SentenceTable& table) {
  if (rows != table.size()) {
    throw DomainError("row count mismatch: embeddings have " + std::to_string(rows) +
                      " rows, sentence table has " + std::to_string(table.size()));
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> raw_rows)
    : dim_(dim), data_(std::move(raw_rows)) {
  if (dim_ == 0) throw DomainError("embedding dim must be positive");
  if (data_.size() % dim_ != 0) throw DomainError("embedding data is not a whole number of rows");
  for (std::size_t r = 0; r < rows(); ++r) {
    float* p = data_.data() + r * dim_;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) norm2 += static_cast<double>(p[j]) * p[j];
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
      throw DomainError("cannot normalize embedding of sentence " + std::to_string(r) +
                        (norm2 == 0.0 ? ": zero vector" : ": non-finite values"));
    }
    // Rows that are already unit length up to float rounding are kept as
    // they are, so saving and reloading a matrix is lossless.
    if (std::abs(norm2 - 1.0) <= static_cast<double>(dim_) * FLT_EPSILON) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < dim_; ++j) p[j] = static_cast<float>(p[j] * inv);
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const corpus::SentenceTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t dim = read_u32(in);
  if (!in) throw DomainError(path.string() + ": truncated header");
  check_row_count(rows, table);
  if (dim == 0) throw DomainError(path.string() + ": zero embedding dim");

  const auto expected = 8 + std::uint64_t{rows} * dim * 4;
  if (std::filesystem::file_size(path) != expected) {
    throw DomainError(path.string() + ": size does not match header (" + std::to_string(rows) +
                      " x " + std::to_string(dim) + ")");
  }
  std::vector<float> data(std::size_t{rows} * dim);
  for (auto& v : data) v = read_f32(in);
  if (!in) throw DomainError(path.string() + ": truncated data");
  return EmbeddingMatrix(dim, std::move(data));
}

EmbeddingMatrix load_embeddings_jsonl(const std::filesystem::path& path,
                                      const corpus::SentenceTable& table) {
  using nlohmann::json;
  std::vector<std::vector<float>> rows(table.size());
  std::vector<bool> seen(table.size(), false);
  std::size_t count = 0;
  std::size_t dim = 0;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    json rec;
    try {
      rec = json::parse(line);
    } catch (const std::exception& e) {
      throw RecordError(line_no, e.what());
    }
    std::size_t id = count;
    const json* values = &rec;
    if (rec.is_object()) {
      if (!rec.contains("sentence_id") || !rec.contains("embedding")) {
        throw RecordError(line_no, "expected keys sentence_id and embedding");
      }
      id = rec["sentence_id"].get<std::size_t>();
      values = &rec["embedding"];
    }
    if (!values->is_array()) throw RecordError(line_no, "embedding is not an array");
    ++count;
    if (count > table.size() || id >= table.size()) {
      throw DomainError("row count mismatch: more embedding rows than sentences");
    }
    if (seen[id]) throw RecordError(line_no, "duplicate row for sentence " + std::to_string(id));
    seen[id] = true;
    rows[id] = values->get<std::vector<float>>();
    if (dim == 0) dim = rows[id].size();
    if (rows[id].size() != dim || dim == 0) throw RecordError(line_no, "inconsistent embedding dim");
  });
  check_row_count(count, table);
  std::vector<float> data;
  data.reserve(count * dim);
  for (auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return EmbeddingMatrix(dim, std::move(data));
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  AtomicFileWriter w(path);
  write_u32(w.stream(), static_cast<std::uint32_t>(matrix.rows()));
  write_u32(w.stream(), static_cast<std::uint32_t>(matrix.dim()));
  for (float v : matrix.data()) write_u32(w.stream(), std::bit_cast<std::uint32_t>(v));
  w.commit();
}

std::vector<float> fallback_embed(std::string_view sentence, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw DomainError("fallback embedding dim must be at least 2");
  const std::string text = corpus::normalize_sentence(sentence);
  if (text.empty()) throw DomainError("cannot embed an empty sentence");

  std::vector<double> acc(dim, 0.0);
  auto add = [&](std::string_view feature, std::uint64_t kind, double weight) {
    const std::uint64_t h = fnv1a(feature, derive_seed(seed, kind));
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    acc[bucket] += (h >> 63) ? -weight : weight;
  };

  std::vector<std::string_view> words;
  for (std::size_t i = 0; i < text.size();) {
    const auto j = std::min(text.find(' ', i), text.size());
    words.push_back(std::string_view(text).substr(i, j - i));
    i = j + 1;
  }
  for (auto w : words) add(w, 1, 1.0);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    add(std::string(words[i]) + ' ' + std::string(words[i + 1]), 2, 0.5);
  }
  const std::string padded = " " + text + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    add(std::string_view(padded).substr(i, 3), 3, 0.7);
  }

  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 == 0.0) acc[0] = norm2 = 1.0;  // all features cancelled; any unit vector works
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

EmbeddingMatrix embed_table_fallback(const corpus::SentenceTable& table, std::size_t dim,
                                     std::uint64_t seed) {
  std::vector<float> data;
  data.reserve(table.size() * dim);
  for (const auto& s : table.sentences()) {
    auto v = fallback_embed(s, dim, seed);
    data.insert(data.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(dim, std::move(data));
}

Neighbor nearest_clustered_sentence(std::span<const float> query, const EmbeddingMatrix& matrix,
                                    const std::vector<bool>& clustered_mask) {
  if (query.size() != matrix.dim()) throw DomainError("query dim does not match embeddings");
  if (clustered_mask.size() != matrix.rows()) throw DomainError("mask size does not match embeddings");
  bool found = false;
  Neighbor best;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (!clustered_mask[i]) continue;
    const double c = dot(query, matrix.row(i));
    if (!found || c > best.cosine) {
      best = {static_cast<SentenceId>(i), c};
      found = true;
    }
  }
  if (!found) throw DomainError("nearest neighbour query with an empty cluster mask");
  return best;
}

}  // namespace fenrich::embedding
