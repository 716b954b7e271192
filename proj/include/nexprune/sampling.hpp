#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nexprune/dataset.hpp"

namespace nexprune {

enum class SamplingStrategy { Random, KMeans, Noise, Full };

const char* sampling_strategy_name(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_name(const std::string& name);

struct SamplingConfig {
  SamplingStrategy strategy = SamplingStrategy::Random;
  int num_samples = 64;
  std::uint64_t seed = 0;
  int kmeans_max_iters = 100;
  float noise_lo = 0.0f;  // noise strategy draws iid uniform pixels
  float noise_hi = 1.0f;
};

// Build the scoring batch. Random draws uniformly without replacement;
// k-means runs per class on flattened raw pixels and returns the samples
// nearest the final centroids; noise ignores the dataset contents; full
// returns every sample in dataset order.
Tensor sample_batch(const Dataset& data, const SamplingConfig& cfg);

// Indices chosen by the strategy (empty for noise). Exposed for tests.
std::vector<int> sample_indices(const Dataset& data, const SamplingConfig& cfg);

// Lloyd's algorithm on row vectors. Returns per-iteration objective values
// (sum of squared distances); the sequence never increases.
struct KMeansResult {
  std::vector<std::vector<float>> centroids;
  std::vector<int> assignment;
  std::vector<double> objective_trace;
};

KMeansResult kmeans(const std::vector<std::vector<float>>& points, int k,
                    int max_iters, std::uint64_t seed);

}  // namespace nexprune
