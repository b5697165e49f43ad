#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cvrpdiff {

using Rng = std::mt19937_64;

// Derives an independent 64-bit seed for a named substream ("data/17",
// "rollout/3/12", ...). Identical (seed, name) pairs always give the same
// stream regardless of evaluation order or thread count.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

inline Rng substream(std::uint64_t seed, std::string_view name) {
  return Rng(substream_seed(seed, name));
}

}  // namespace cvrpdiff
