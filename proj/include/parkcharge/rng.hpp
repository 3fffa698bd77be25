#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace parkcharge {

// std::mt19937_64's output sequence is fixed by the standard but the
// distributions are not, so every seeded draw in the library goes through
// these helpers to stay reproducible across standard libraries.

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // 2^64 mod n; draws at or above 2^64 - excess are rejected.
  const std::uint64_t excess = (Rng::max() % n + 1) % n;
  while (true) {
    const std::uint64_t r = rng();
    if (excess == 0 || r < Rng::max() - excess + 1) return r % n;
  }
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

/// Derives an independent stream seed from a base seed and a tag.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace parkcharge
