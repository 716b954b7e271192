#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"
#include "nexprune/sampling.hpp"
#include "nexprune/synthetic.hpp"

using namespace nexprune;

namespace {

Dataset small_dataset(int n, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.num_samples = n;
  cfg.num_classes = 4;
  cfg.channels = 2;
  cfg.height = 6;
  cfg.width = 6;
  cfg.seed = seed;
  return make_synthetic_dataset(cfg);
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("kmeans objective never increases") {
  Rng rng = make_rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<float>> points;
    const int n = 20 + static_cast<int>(rng() % 40);
    const int dim = 3 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      std::vector<float> p(static_cast<std::size_t>(dim));
      for (float& v : p) v = uniform_float(rng, -2.0f, 2.0f);
      points.push_back(std::move(p));
    }
    const int k = 2 + static_cast<int>(rng() % 4);
    KMeansResult res = kmeans(points, k, 100, trial);
    REQUIRE(!res.objective_trace.empty());
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);
    CHECK(res.centroids.size() == static_cast<std::size_t>(k));
    CHECK(res.assignment.size() == points.size());
    for (int a : res.assignment) {
      CHECK(a >= 0);
      CHECK(a < k);
    }
  }
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  std::vector<std::vector<float>> points;
  Rng rng = make_rng(62);
  for (int i = 0; i < 30; ++i)
    points.push_back({uniform_float(rng, 0, 1), uniform_float(rng, 0, 1)});
  KMeansResult a = kmeans(points, 4, 100, 9);
  KMeansResult b = kmeans(points, 4, 100, 9);
  CHECK(a.assignment == b.assignment);
  REQUIRE(a.centroids.size() == b.centroids.size());
  for (std::size_t i = 0; i < a.centroids.size(); ++i)
    CHECK(a.centroids[i] == b.centroids[i]);
}

TEST_CASE("kmeans survives duplicate points and empty clusters") {
  // More clusters than distinct points forces empty clusters.
  std::vector<std::vector<float>> points(12, {1.0f, 1.0f});
  points[0] = {5.0f, 5.0f};
  KMeansResult res = kmeans(points, 6, 50, 3);
  CHECK(res.centroids.size() == 6);
  for (const auto& c : res.centroids) {
    CHECK(std::isfinite(c[0]));
    CHECK(std::isfinite(c[1]));
  }
}

TEST_CASE("random indices are sorted, distinct and in range") {
  Dataset data = small_dataset(40, 7);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::Random;
  cfg.num_samples = 12;
  cfg.seed = 100;
  std::vector<int> idx = sample_indices(data, cfg);
  REQUIRE(idx.size() == 12);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  std::set<int> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == idx.size());
  for (int i : idx) {
    CHECK(i >= 0);
    CHECK(i < 40);
  }
  CHECK(sample_indices(data, cfg) == idx);  // deterministic
  cfg.seed = 101;
  CHECK(sample_indices(data, cfg) != idx);  // seed-sensitive
}

TEST_CASE("stratified indices spread the budget over classes") {
  Dataset data = small_dataset(80, 8);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::KMeans;
  cfg.num_samples = 10;
  cfg.seed = 5;
  std::vector<int> idx = sample_indices(data, cfg);
  REQUIRE(idx.size() == 10);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  std::set<int> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == idx.size());

  // 10 samples over 4 classes: every class contributes 2 or 3.
  std::map<int, int> per_class;
  for (int i : idx) per_class[data.labels[static_cast<std::size_t>(i)]]++;
  CHECK(per_class.size() == 4);
  for (const auto& [cls, count] : per_class) {
    CHECK(count >= 2);
    CHECK(count <= 3);
  }
}

TEST_CASE("full strategy returns the identity") {
  Dataset data = small_dataset(17, 9);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::Full;
  std::vector<int> idx = sample_indices(data, cfg);
  REQUIRE(idx.size() == 17);
  for (int i = 0; i < 17; ++i) CHECK(idx[static_cast<std::size_t>(i)] == i);
  Tensor batch = sample_batch(data, cfg);
  CHECK(batch.shape()[0] == 17);
}

TEST_CASE("noise batches ignore the dataset values") {
  Dataset data = small_dataset(10, 11);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::Noise;
  cfg.num_samples = 6;
  cfg.seed = 21;
  cfg.noise_lo = 0.25f;
  cfg.noise_hi = 0.75f;
  CHECK(sample_indices(data, cfg).empty());
  Tensor batch = sample_batch(data, cfg);
  REQUIRE(batch.rank() == 4);
  CHECK(batch.shape()[0] == 6);
  CHECK(batch.shape()[1] == 2);
  CHECK(batch.shape()[2] == 6);
  CHECK(batch.shape()[3] == 6);
  for (std::int64_t i = 0; i < batch.numel(); ++i) {
    CHECK(batch[i] >= 0.25f);
    CHECK(batch[i] <= 0.75f);
  }
  Tensor again = sample_batch(data, cfg);
  for (std::int64_t i = 0; i < batch.numel(); ++i) CHECK(batch[i] == again[i]);
}

TEST_CASE("sample batch gathers the selected images") {
  Dataset data = small_dataset(30, 13);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::Random;
  cfg.num_samples = 5;
  cfg.seed = 77;
  std::vector<int> idx = sample_indices(data, cfg);
  Tensor batch = sample_batch(data, cfg);
  REQUIRE(batch.shape()[0] == 5);
  const std::int64_t per = batch.numel() / 5;
  for (int r = 0; r < 5; ++r)
    for (std::int64_t j = 0; j < per; ++j)
      CHECK(batch[r * per + j] ==
            data.images[static_cast<std::int64_t>(idx[static_cast<std::size_t>(r)]) * per + j]);
}

TEST_CASE("oversized budgets are rejected") {
  Dataset data = small_dataset(8, 15);
  SamplingConfig cfg;
  cfg.strategy = SamplingStrategy::Random;
  cfg.num_samples = 9;
  CHECK_THROWS_AS(sample_indices(data, cfg), Error);
}

}  // TEST_SUITE
