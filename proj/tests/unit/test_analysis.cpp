#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nexprune/analysis.hpp"
#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"

using namespace nexprune;

namespace {

// Reference metrics, written from the definitions with different
// accumulation formulas than the library versions.
double euclidean_ref(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = a.size(); i > 0; --i) {
    const double d = static_cast<double>(a[i - 1]) - b[i - 1];
    s += d * d;
  }
  return std::sqrt(s);
}

double cosine_ref(const std::vector<float>& a, const std::vector<float>& b) {
  double na = 0.0, nb = 0.0;
  for (float v : a) na += static_cast<double>(v) * v;
  for (float v : b) nb += static_cast<double>(v) * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += static_cast<double>(a[i]) * b[i];
  return dot / std::sqrt(na) / std::sqrt(nb);
}

std::optional<double> pearson_ref(const std::vector<float>& a,
                                  const std::vector<float>& b) {
  const double n = static_cast<double>(a.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
  return (n * sxy - sx * sy) / (std::sqrt(vx) * std::sqrt(vy));
}

double ssim_ref(const MapRaster& a, const MapRaster& b) {
  const int wh = std::min(8, a.rows), ww = std::min(8, a.cols);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const double n = static_cast<double>(wh) * ww;
  double total = 0.0;
  int wins = 0;
  for (int y = 0; y + wh <= a.rows; ++y)
    for (int x = 0; x + ww <= a.cols; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dx = 0; dx < ww; ++dx)
        for (int dy = 0; dy < wh; ++dy) {
          const double va = a.at(y + dy, x + dx);
          const double vb = b.at(y + dy, x + dx);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double mua = sa / n, mub = sb / n;
      const double vara = saa / n - mua * mua;
      const double varb = sbb / n - mub * mub;
      const double cov = sab / n - mua * mub;
      total += ((2.0 * mua * mub + c1) * (2.0 * cov + c2)) /
               ((mua * mua + mub * mub + c1) * (vara + varb + c2));
      ++wins;
    }
  return total / wins;
}

std::vector<float> random_vec(Rng& rng, int n) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (float& x : v) x = uniform_float(rng, 0.0f, 1.0f);
  return v;
}

ScoreMap random_map(Rng& rng, const std::vector<int>& widths) {
  ScoreMap m;
  for (std::size_t l = 0; l < widths.size(); ++l)
    m.scores[static_cast<int>(l) * 2] = random_vec(rng, widths[l]);
  return m;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("interpolation is endpoint aligned") {
  std::vector<float> out = interpolate_row({0.0f, 1.0f}, 5);
  REQUIRE(out.size() == 5);
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(0.25));
  CHECK(out[2] == doctest::Approx(0.5));
  CHECK(out[3] == doctest::Approx(0.75));
  CHECK(out[4] == doctest::Approx(1.0));

  Rng rng = make_rng(81);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng() % 30);
    const int target = 2 + static_cast<int>(rng() % 50);
    std::vector<float> row = random_vec(rng, n);
    std::vector<float> up = interpolate_row(row, target);
    CHECK(up.front() == doctest::Approx(row.front()));
    CHECK(up.back() == doctest::Approx(row.back()));
    const float lo = *std::min_element(row.begin(), row.end());
    const float hi = *std::max_element(row.begin(), row.end());
    for (float v : up) {
      CHECK(v >= lo - 1e-6f);
      CHECK(v <= hi + 1e-6f);
    }
  }
}

TEST_CASE("interpolation degenerate rows") {
  std::vector<float> c = interpolate_row({0.7f}, 6);
  for (float v : c) CHECK(v == 0.7f);
  std::vector<float> one = interpolate_row({0.1f, 0.9f, 0.3f}, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 0.1f);
  // Same width passes through unchanged.
  std::vector<float> same = interpolate_row({0.5f, 0.25f, 0.75f}, 3);
  CHECK(same[0] == doctest::Approx(0.5));
  CHECK(same[1] == doctest::Approx(0.25));
  CHECK(same[2] == doctest::Approx(0.75));
}

TEST_CASE("rasterization pads rows to the widest layer") {
  ScoreMap m;
  m.scores[0] = {1.0f, 2.0f, 3.0f};
  m.scores[4] = {5.0f, 6.0f, 7.0f, 8.0f, 9.0f};
  MapRaster r = rasterize_score_map(m);
  CHECK(r.rows == 2);
  CHECK(r.cols == 5);
  CHECK(r.at(0, 0) == doctest::Approx(1.0));
  CHECK(r.at(0, 4) == doctest::Approx(3.0));
  CHECK(r.at(0, 2) == doctest::Approx(2.0));
  CHECK(r.at(1, 0) == doctest::Approx(5.0));
  CHECK(r.at(1, 4) == doctest::Approx(9.0));
  for (int j = 0; j < 5; ++j) {
    CHECK(r.valid[static_cast<std::size_t>(j)] == (j < 3 ? 1 : 0));
    CHECK(r.valid[static_cast<std::size_t>(5 + j)] == 1);
  }
}

TEST_CASE("metrics agree with reference implementations") {
  Rng rng = make_rng(82);
  for (int t = 0; t < 100; ++t) {
    const int n = 50 + static_cast<int>(rng() % 150);
    std::vector<float> a = random_vec(rng, n);
    std::vector<float> b = random_vec(rng, n);
    CHECK(euclidean_distance(a, b) == doctest::Approx(euclidean_ref(a, b)).epsilon(1e-9));
    CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_ref(a, b)).epsilon(1e-9));
    auto p = pearson_correlation(a, b);
    auto pr = pearson_ref(a, b);
    REQUIRE(p.has_value() == pr.has_value());
    if (p) CHECK(*p == doctest::Approx(*pr).epsilon(1e-9));
  }
}

TEST_CASE("ssim agrees with the reference and is 1 on self") {
  Rng rng = make_rng(83);
  for (int t = 0; t < 20; ++t) {
    const int layers = 2 + static_cast<int>(rng() % 10);
    std::vector<int> widths;
    for (int l = 0; l < layers; ++l) widths.push_back(4 + static_cast<int>(rng() % 28));
    MapRaster a = rasterize_score_map(random_map(rng, widths));
    MapRaster b = rasterize_score_map(random_map(rng, widths));
    CHECK(ssim(a, b) == doctest::Approx(ssim_ref(a, b)).epsilon(1e-9));
    CHECK(ssim(a, a) == doctest::Approx(1.0));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)));
    CHECK(ssim(a, b) <= 1.0 + 1e-12);
  }
}

TEST_CASE("metric edge cases") {
  std::vector<float> zero(10, 0.0f);
  std::vector<float> ones(10, 1.0f);
  CHECK(cosine_similarity(zero, ones) == 0.0);
  CHECK(cosine_similarity(zero, zero) == 0.0);
  CHECK(euclidean_distance(ones, ones) == 0.0);
  CHECK_FALSE(pearson_correlation(ones, ones).has_value());

  std::vector<float> ramp(10);
  for (int i = 0; i < 10; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<float>(i);
  CHECK_FALSE(pearson_correlation(ramp, ones).has_value());
  auto p = pearson_correlation(ramp, ramp);
  REQUIRE(p.has_value());
  CHECK(*p == doctest::Approx(1.0));
  std::vector<float> anti(10);
  for (int i = 0; i < 10; ++i) anti[static_cast<std::size_t>(i)] = static_cast<float>(9 - i);
  CHECK(*pearson_correlation(ramp, anti) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(euclidean_distance(zero, {1.0f}), Error);
}

TEST_CASE("scope restriction drops later layers") {
  Rng rng = make_rng(84);
  ScoreMap a = random_map(rng, {6, 6, 6, 6});
  ScoreMap b = random_map(rng, {6, 6, 6, 6});
  // Make the last two layers identical; FirstN(2) must still differ,
  // All must be pulled toward agreement.
  b.scores[4] = a.scores[4];
  b.scores[6] = a.scores[6];
  MapComparison all = compare_score_maps(a, b, CompareScope::All, 0);
  MapComparison first2 = compare_score_maps(a, b, CompareScope::FirstN, 2);
  CHECK(first2.euclidean == doctest::Approx(all.euclidean).epsilon(1e-12));

  ScoreMap b2 = b;
  b2.scores[0] = a.scores[0];
  b2.scores[2] = a.scores[2];
  MapComparison same = compare_score_maps(a, b2, CompareScope::All, 0);
  CHECK(same.euclidean == doctest::Approx(0.0));
  CHECK(same.cosine == doctest::Approx(1.0));
  CHECK(same.ssim_value == doctest::Approx(1.0));

  CHECK_THROWS_AS(compare_score_maps(a, b, CompareScope::FirstN, 9), Error);
  ScoreMap other = random_map(rng, {6, 6});
  CHECK_THROWS_AS(compare_score_maps(a, other, CompareScope::All, 0), Error);
}

TEST_CASE("map cosine works on the flat vectors") {
  ScoreMap a, b;
  a.scores[0] = {1.0f, 0.0f};
  a.scores[3] = {0.0f};
  b.scores[0] = {1.0f, 0.0f};
  b.scores[3] = {0.0f};
  CHECK(map_cosine(a, b) == doctest::Approx(1.0));
  b.scores[0] = {0.0f, 1.0f};
  CHECK(map_cosine(a, b) == doctest::Approx(0.0));
}

}  // TEST_SUITE
