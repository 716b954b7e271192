#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nexprune/layers.hpp"
#include "nexprune/tensor.hpp"

namespace nexprune {

enum class RunMode { Train, Eval };

// Ordered layer graph. Layers are stored in execution order; every layer's
// inputs refer to earlier layers (or -1 for the network input), which makes
// the graph acyclic by construction.
struct NetworkGraph {
  std::vector<LayerSpec> layers;
  std::vector<int> input_shape;  // {channels, height, width}

  int layer_index(const std::string& name) const;
  std::vector<std::vector<int>> consumers() const;
  // Output layer = the unique layer with no consumers (the classifier head).
  int output_layer() const;

  // Spatial/feature shape of each layer output for a single sample,
  // e.g. {C,H,W} or {F}. Throws on inconsistent wiring.
  std::vector<std::vector<int>> infer_shapes() const;
  void validate() const;

  // Conv layer ids in execution order (the prunable structures).
  std::vector<int> conv_layers() const;

  // Capture point of a conv: the first Relu reached from its output by
  // walking through BatchNorm/ResidualAdd consumers. Scoring reads the
  // post-nonlinearity activation map there, channel k for filter k. Falls
  // back to the last layer of the walked chain when no Relu follows.
  int capture_point(int conv_id) const;
  std::map<int, int> capture_points() const;
};

// Per-forward intermediate state kept for backward.
struct ForwardCache {
  RunMode mode = RunMode::Eval;
  std::vector<Tensor> outputs;               // per layer
  std::vector<Tensor> bn_xhat;               // bn: normalized input
  std::vector<std::vector<float>> bn_inv_std;  // bn: 1/sqrt(var+eps) per channel
  std::vector<std::vector<float>> bn_mean;     // bn: mean used per channel
  std::vector<std::vector<int>> pool_argmax;   // maxpool: flat input index per output
  Tensor input;
};

// Captured post-nonlinearity activations, keyed by capture layer id, plus
// the conv -> capture layer mapping resolved at forward time.
struct ActivationStore {
  std::map<int, Tensor> captured;    // capture layer id -> (N,C,H,W)
  std::map<int, int> conv_to_point;  // conv layer id -> capture layer id

  const Tensor& for_conv(int conv_id) const;
};

struct CaptureConfig {
  bool capture_all_convs = false;
  std::vector<int> conv_ids;  // explicit capture requests when not all
};

// Runs the network on a batch (N,C,H,W). When `store` is given, records the
// activation patterns at the requested capture points. When `cache` is given,
// retains everything backward needs. BatchNorm uses batch statistics in
// Train mode and running statistics in Eval mode; untrained running stats
// (running_count == 0) fall back to batch statistics.
Tensor forward(NetworkGraph& net, const Tensor& batch, RunMode mode,
               const CaptureConfig* capture = nullptr,
               ActivationStore* store = nullptr, ForwardCache* cache = nullptr);

// Per-parameter gradients, same layout as the owning layers.
struct GradientStore {
  struct LayerGrads {
    Tensor weight;
    Tensor bias;
    Tensor gamma;
    Tensor beta;
  };
  std::vector<LayerGrads> layers;
  Tensor input;  // d(loss)/d(batch)
};

// Backpropagates `loss_grad` (gradient w.r.t. the output layer's activations)
// through the cached forward pass.
GradientStore backward(NetworkGraph& net, const ForwardCache& cache,
                       const Tensor& loss_grad);

// p <- p - lr * grad(p) for every learnable parameter.
void sgd_step(NetworkGraph& net, const GradientStore& grads, float lr);

// Mean softmax cross-entropy over the batch. Returns the loss and the
// gradient w.r.t. the logits.
std::pair<double, Tensor> cross_entropy_loss(const Tensor& logits,
                                             const std::vector<int>& labels);

}  // namespace nexprune
