#include "nexprune/patterns.hpp"

#include <bit>

#include "nexprune/error.hpp"

namespace nexprune {

PatternSet binarize_activations(const Tensor& captured) {
  require(captured.rank() == 4 || captured.rank() == 2, ErrorCode::ShapeMismatch,
          "captured activations must be (N,F,H,W) or (N,F)");
  const int n = captured.dim(0);
  const int f = captured.dim(1);
  const std::int64_t spatial =
      captured.rank() == 4
          ? static_cast<std::int64_t>(captured.dim(2)) * captured.dim(3)
          : 1;

  PatternSet set;
  set.num_filters = f;
  set.pattern_bits = static_cast<std::int64_t>(n) * spatial;
  const std::int64_t wpf = set.words_per_filter();
  set.words.assign(static_cast<std::size_t>(wpf) * f, 0);

  // Bit order is sample-major: bit (s * spatial + p) of filter k holds the
  // sign test of sample s, position p.
  for (int k = 0; k < f; ++k) {
    std::uint64_t* dst = set.words.data() + static_cast<std::size_t>(k) * wpf;
    std::int64_t bit = 0;
    for (int s = 0; s < n; ++s) {
      const float* src =
          captured.data() +
          (static_cast<std::size_t>(s) * f + static_cast<std::size_t>(k)) * spatial;
      for (std::int64_t p = 0; p < spatial; ++p, ++bit) {
        if (src[p] > 0.0f) dst[bit / 64] |= (std::uint64_t{1} << (bit % 64));
      }
    }
  }
  return set;
}

std::int64_t hamming_distance(const std::uint64_t* a, const std::uint64_t* b,
                              std::int64_t words) {
  std::int64_t total = 0;
  for (std::int64_t w = 0; w < words; ++w) total += std::popcount(a[w] ^ b[w]);
  return total;
}

double normalized_hamming(const PatternSet& set, int i, int j) {
  require(i >= 0 && i < set.num_filters && j >= 0 && j < set.num_filters,
          ErrorCode::InvalidArgument, "filter index out of range");
  require(set.pattern_bits > 0, ErrorCode::InvalidArgument, "empty pattern");
  const std::int64_t d =
      hamming_distance(set.filter(i), set.filter(j), set.words_per_filter());
  return static_cast<double>(d) / static_cast<double>(set.pattern_bits);
}

}  // namespace nexprune
