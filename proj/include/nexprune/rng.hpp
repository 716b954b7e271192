#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nexprune {

// All randomness in the toolkit flows through seeded std::mt19937_64
// instances so that identical (config, seed) pairs reproduce bitwise.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derive an independent stream for a sub-task without correlating streams.
inline Rng sub_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t mixed = stream ^ std::uint64_t{0x9e3779b97f4a7c15};
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32)};
  return Rng(seq);
}

inline float uniform_float(Rng& rng, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  return d(rng);
}

inline float normal_float(Rng& rng, float mean, float stddev) {
  std::normal_distribution<float> d(mean, stddev);
  return d(rng);
}

// Sample k distinct indices from [0, n) without replacement, in draw order.
inline std::vector<int> sample_without_replacement(Rng& rng, int n, int k) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> d(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(d(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

}  // namespace nexprune
