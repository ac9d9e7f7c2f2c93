#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic random streams. All draws go through mt19937_64 plus the
// explicit mappings below; std::uniform_real_distribution and friends are
// avoided because their output is implementation-defined. Runs therefore
// reproduce bit-for-bit across standard libraries.

namespace bort {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Key for a substream, e.g. (run seed, epoch).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream + 0x9E3779B97F4A7C15ULL));
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

/// Uniform in [0,1) using the top 53 bits of one mt19937_64 draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller on two uniform01 draws.
inline double gaussian01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Uniform integer in [0, n). Modulo mapping; the bias at n << 2^64 is negligible
/// and the mapping is part of the documented stream contract.
inline uint64_t uniform_index(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

/// Fisher-Yates permutation of 0..n-1, high index downward.
inline std::vector<int64_t> fisher_yates_perm(int64_t n, std::mt19937_64& rng) {
  std::vector<int64_t> p(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
  for (int64_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(i + 1)));
    std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
  }
  return p;
}

}  // namespace bort
