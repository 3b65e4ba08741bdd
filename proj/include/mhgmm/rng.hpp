#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mhgmm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a list of tags,
/// e.g. stream_seed(master, {split_id, lambda_index}).
inline std::uint64_t stream_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(parent);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform draw on [0, 1).
inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mhgmm
