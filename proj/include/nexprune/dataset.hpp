#pragma once

#include <vector>

#include "nexprune/tensor.hpp"

namespace nexprune {

// In-memory labelled image set. Images are (N,C,H,W) float32, labels are
// class indices aligned with the first image axis.
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return images.empty() ? 0 : images.dim(0); }

  // Copy the selected samples, preserving the given order.
  Dataset subset(const std::vector<int>& indices) const;

  // Copy samples [begin, end).
  Dataset slice(int begin, int end) const;

  void validate() const;
};

}  // namespace nexprune
