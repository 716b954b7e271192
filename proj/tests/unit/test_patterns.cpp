#include <doctest.h>

#include "nexprune/patterns.hpp"
#include "nexprune/rng.hpp"
#include "../support/oracles.hpp"

using namespace nexprune;

namespace {

Tensor random_activations(Rng& rng, int n, int f, int h, int w) {
  Tensor t({n, f, h, w});
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = uniform_float(rng, -1.0f, 1.0f);
  return t;
}

}  // namespace

TEST_SUITE("patterns") {

TEST_CASE("binarization uses a strict sign test") {
  Tensor t({1, 2, 1, 3},
           {-1.0f, 0.0f, 0.5f, 1e-30f, -0.0f, 2.0f});
  PatternSet set = binarize_activations(t);
  REQUIRE(set.num_filters == 2);
  REQUIRE(set.pattern_bits == 3);
  CHECK(set.bit(0, 0) == false);  // negative
  CHECK(set.bit(0, 1) == false);  // exact zero stays zero
  CHECK(set.bit(0, 2) == true);
  CHECK(set.bit(1, 0) == true);  // tiny positive counts
  CHECK(set.bit(1, 1) == false); // negative zero is not positive
  CHECK(set.bit(1, 2) == true);
}

TEST_CASE("pack then unpack is the identity") {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> fdist(1, 6), sdist(1, 9);
    const int n = 1 + trial % 3, f = fdist(rng), h = sdist(rng), w = sdist(rng);
    Tensor act = random_activations(rng, n, f, h, w);
    PatternSet set = binarize_activations(act);
    REQUIRE(set.pattern_bits == static_cast<std::int64_t>(n) * h * w);
    for (int k = 0; k < f; ++k) {
      std::int64_t bit = 0;
      for (int s = 0; s < n; ++s)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x, ++bit)
            REQUIRE(set.bit(k, bit) == (act.at4(s, k, y, x) > 0.0f));
    }
  }
}

TEST_CASE("trailing bits of the last word are zero") {
  Rng rng = make_rng(32);
  Tensor act = random_activations(rng, 1, 3, 5, 7);  // 35 bits, not a multiple of 64
  PatternSet set = binarize_activations(act);
  for (int k = 0; k < 3; ++k) {
    const std::uint64_t last = set.filter(k)[set.words_per_filter() - 1];
    for (int b = static_cast<int>(set.pattern_bits % 64); b < 64; ++b)
      CHECK(((last >> b) & 1u) == 0u);
  }
}

TEST_CASE("packed hamming equals the per-bit oracle") {
  Rng rng = make_rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> sdist(1, 12);
    Tensor act = random_activations(rng, sdist(rng), 2, sdist(rng), sdist(rng));
    PatternSet set = binarize_activations(act);
    const std::int64_t packed =
        hamming_distance(set.filter(0), set.filter(1), set.words_per_filter());
    const std::int64_t naive =
        oracle::naive_hamming(oracle::unpack_filter(set, 0),
                              oracle::unpack_filter(set, 1));
    REQUIRE(packed == naive);
  }
}

TEST_CASE("normalized hamming lies in [0,1] and is symmetric") {
  Rng rng = make_rng(34);
  Tensor act = random_activations(rng, 3, 5, 4, 4);
  PatternSet set = binarize_activations(act);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      const double d = normalized_hamming(set, i, j);
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
      CHECK(d == normalized_hamming(set, j, i));
      if (i == j) CHECK(d == 0.0);
    }
}

}  // TEST_SUITE
