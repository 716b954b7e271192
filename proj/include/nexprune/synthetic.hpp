#pragma once

#include <cstdint>
#include <utility>

#include "nexprune/dataset.hpp"

namespace nexprune {

// Synthetic classification task: each class is a Gaussian blob with a
// class-specific location and color, drawn on a noisy background. Class
// geometry depends only on (seed, class), so two datasets generated with
// the same config are identical and larger datasets extend smaller ones'
// class structure.
struct SyntheticConfig {
  int num_samples = 2000;
  int num_classes = 10;
  int channels = 3;
  int height = 16;
  int width = 16;
  float jitter = 1.5f;       // per-sample blob center displacement, pixels
  float blob_sigma = 2.5f;   // blob radius, pixels
  float noise_sigma = 0.15f; // pixel noise level
  std::uint64_t seed = 0;
};

Dataset make_synthetic_dataset(const SyntheticConfig& cfg);

// Deterministic stratified split: the first part receives `train_fraction`
// of every class (rounded down), the second the rest.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             float train_fraction,
                                             std::uint64_t seed);

}  // namespace nexprune
