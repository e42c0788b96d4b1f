#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fenrich {

// Index into the corpus-wide unique sentence table.
using SentenceId = std::uint32_t;

// Dense cluster id in [0, K). Density methods additionally use kNoise.
using ClusterId = std::int32_t;
inline constexpr ClusterId kNoise = -1;

// Sorted, duplicate-free set of cluster ids.
using ClusterSet = std::vector<ClusterId>;

// Sign of a cluster: positive means a normal/healthy observation.
enum class Sign : std::int8_t { kNegative = -1, kPositive = +1 };

constexpr int to_int(Sign s) noexcept { return static_cast<int>(s); }

constexpr std::string_view to_string(Sign s) noexcept {
  return s == Sign::kPositive ? "positive" : "negative";
}

}  // namespace fenrich
