#pragma once

#include <cstdint>
#include <random>

namespace puq {

// The single generator used across the library. Streams derived from one run
// seed are decorrelated through splitmix64, e.g. rng_for(seed, epoch).
// Sequences are reproducible for a given binary; std distributions are
// implementation-defined so bit-equality across toolchains is not promised.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Rng rng_for(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Named streams so unrelated consumers of one seed never share a sequence.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kSplit = 3;
inline constexpr std::uint64_t kCorrupt = 4;
inline constexpr std::uint64_t kSubsample = 5;
inline constexpr std::uint64_t kData = 6;
}  // namespace streams

}  // namespace puq
