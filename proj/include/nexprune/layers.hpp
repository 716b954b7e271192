#pragma once

#include <string>
#include <vector>

#include "nexprune/tensor.hpp"

namespace nexprune {

enum class LayerKind {
  Conv2d,
  BatchNorm2d,
  Relu,
  MaxPool2d,
  AvgPool2d,
  Linear,
  Flatten,
  ResidualAdd,
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// One node of the network graph. Hyperparameters are per kind; unused
// fields stay at their defaults. Parameters live in the layer so that
// copying a NetworkGraph deep-copies the whole model state.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::string name;
  // Producer layer ids; -1 denotes the network input. ResidualAdd has two
  // entries, everything else one.
  std::vector<int> inputs;

  // conv2d
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;

  // pools
  int pool_h = 0;
  int pool_w = 0;
  int pool_stride = 0;

  // linear
  int in_features = 0;
  int out_features = 0;

  // learnable parameters (conv/linear: weight+bias, bn: gamma+beta)
  Tensor weight;
  Tensor bias;
  Tensor gamma;
  Tensor beta;

  // bn buffers
  Tensor running_mean;
  Tensor running_var;
  std::int64_t running_count = 0;  // number of batches folded into the stats

  bool has_params() const {
    return kind == LayerKind::Conv2d || kind == LayerKind::Linear ||
           kind == LayerKind::BatchNorm2d;
  }
};

}  // namespace nexprune
