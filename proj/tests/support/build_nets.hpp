// Randomized small-network factory for structural tests. Networks are
// always valid: conv/norm/relu stages, optional residual blocks and pools,
// a linear head.
#pragma once

#include "nexprune/architectures.hpp"
#include "nexprune/network.hpp"
#include "nexprune/rng.hpp"

namespace testnet {

using namespace nexprune;

inline int push(NetworkGraph& net, LayerSpec l) {
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

inline int conv(NetworkGraph& net, const std::string& name, int in, int ic,
                int oc, int k, int stride, int pad) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.name = name;
  l.inputs = {in};
  l.in_channels = ic;
  l.out_channels = oc;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.padding = pad;
  l.weight = Tensor({oc, ic, k, k});
  l.bias = Tensor({oc});
  return push(net, std::move(l));
}

inline int bn(NetworkGraph& net, const std::string& name, int in, int c) {
  LayerSpec l;
  l.kind = LayerKind::BatchNorm2d;
  l.name = name;
  l.inputs = {in};
  l.gamma = Tensor({c});
  l.beta = Tensor({c});
  l.running_mean = Tensor({c});
  l.running_var = Tensor({c});
  return push(net, std::move(l));
}

inline int relu(NetworkGraph& net, const std::string& name, int in) {
  LayerSpec l;
  l.kind = LayerKind::Relu;
  l.name = name;
  l.inputs = {in};
  return push(net, std::move(l));
}

inline int pool(NetworkGraph& net, const std::string& name, int in, bool max_pool) {
  LayerSpec l;
  l.kind = max_pool ? LayerKind::MaxPool2d : LayerKind::AvgPool2d;
  l.name = name;
  l.inputs = {in};
  l.pool_h = l.pool_w = 2;
  l.pool_stride = 2;
  return push(net, std::move(l));
}

inline int add(NetworkGraph& net, const std::string& name, int a, int b) {
  LayerSpec l;
  l.kind = LayerKind::ResidualAdd;
  l.name = name;
  l.inputs = {a, b};
  return push(net, std::move(l));
}

inline int flatten(NetworkGraph& net, const std::string& name, int in) {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  l.name = name;
  l.inputs = {in};
  return push(net, std::move(l));
}

inline int linear(NetworkGraph& net, const std::string& name, int in, int in_f,
                  int out_f) {
  LayerSpec l;
  l.kind = LayerKind::Linear;
  l.name = name;
  l.inputs = {in};
  l.in_features = in_f;
  l.out_features = out_f;
  l.weight = Tensor({out_f, in_f});
  l.bias = Tensor({out_f});
  return push(net, std::move(l));
}

// A random but always well-formed conv network.
inline NetworkGraph random_network(Rng& rng, std::uint64_t init_seed) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> chan(4, 10);
  std::uniform_int_distribution<int> stage_count(2, 3);

  NetworkGraph net;
  const int in_c = 2 + coin(rng);
  const int hw = 8;
  net.input_shape = {in_c, hw, hw};

  int x = -1;
  int c_prev = in_c;
  int spatial = hw;
  const int stages = stage_count(rng);
  for (int s = 0; s < stages; ++s) {
    const std::string p = "s" + std::to_string(s);
    const int c_out = chan(rng);
    x = conv(net, p + ".conv", x, c_prev, c_out, 3, 1, 1);
    const bool with_bn = coin(rng) == 1;
    if (with_bn) x = bn(net, p + ".bn", x, c_out);
    x = relu(net, p + ".relu", x);
    c_prev = c_out;

    if (coin(rng) == 1) {
      // Identity residual block on top of the stage.
      const int shortcut = x;
      int y = conv(net, p + ".rconv1", x, c_prev, c_prev, 3, 1, 1);
      y = bn(net, p + ".rbn1", y, c_prev);
      y = relu(net, p + ".rrelu1", y);
      y = conv(net, p + ".rconv2", y, c_prev, c_prev, 3, 1, 1);
      y = bn(net, p + ".rbn2", y, c_prev);
      y = add(net, p + ".radd", y, shortcut);
      x = relu(net, p + ".rrelu2", y);
    }

    if (spatial >= 4 && coin(rng) == 1) {
      x = pool(net, p + ".pool", x, coin(rng) == 1);
      spatial /= 2;
    }
  }
  x = flatten(net, "flatten", x);
  std::uniform_int_distribution<int> classes(4, 6);
  linear(net, "head", x, c_prev * spatial * spatial, classes(rng));
  init_parameters(net, init_seed);
  net.validate();
  return net;
}

inline Tensor random_batch(Rng& rng, const NetworkGraph& net, int n) {
  Tensor batch({n, net.input_shape[0], net.input_shape[1], net.input_shape[2]});
  for (std::int64_t i = 0; i < batch.numel(); ++i)
    batch[i] = uniform_float(rng, -1.0f, 1.0f);
  return batch;
}

}  // namespace testnet
