#pragma once

#include <cstdint>
#include <vector>

#include "nexprune/tensor.hpp"

namespace nexprune {

// One binarized activation pattern per conv filter, packed 64 bits per
// word. Bit b of the pattern is 1 exactly when the captured activation at
// flat position b is strictly positive. Trailing bits of the last word are
// forced to zero so word-level operations never see garbage.
struct PatternSet {
  int num_filters = 0;
  std::int64_t pattern_bits = 0;  // bits per filter
  std::vector<std::uint64_t> words;  // [filter][word], row-major

  std::int64_t words_per_filter() const {
    return (pattern_bits + 63) / 64;
  }
  const std::uint64_t* filter(int f) const {
    return words.data() + static_cast<std::size_t>(f) * words_per_filter();
  }
  bool bit(int f, std::int64_t b) const {
    return (filter(f)[b / 64] >> (b % 64)) & 1u;
  }
};

// Binarize a captured activation tensor (N, F, H, W) into per-filter
// patterns of N*H*W bits, sample-major. (N, F) input packs 1 bit/sample.
PatternSet binarize_activations(const Tensor& captured);

// Hamming distance between two packed patterns in word units.
std::int64_t hamming_distance(const std::uint64_t* a, const std::uint64_t* b,
                              std::int64_t words);

// Length-normalized Hamming distance between filters i and j of a set.
double normalized_hamming(const PatternSet& set, int i, int j);

}  // namespace nexprune
