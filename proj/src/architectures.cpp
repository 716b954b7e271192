#include "nexprune/architectures.hpp"

#include <cmath>

#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"

namespace nexprune {

namespace {

// Builder helpers. Each returns the index of the layer just added so the
// graph can be wired by hand where it branches.
int add_conv(NetworkGraph& net, const std::string& name, int input, int in_c,
             int out_c, int k, int stride, int padding) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.name = name;
  l.inputs = {input};
  l.in_channels = in_c;
  l.out_channels = out_c;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.padding = padding;
  l.weight = Tensor({out_c, in_c, k, k});
  l.bias = Tensor({out_c});
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_bn(NetworkGraph& net, const std::string& name, int input, int channels) {
  LayerSpec l;
  l.kind = LayerKind::BatchNorm2d;
  l.name = name;
  l.inputs = {input};
  l.gamma = Tensor({channels});
  l.beta = Tensor({channels});
  l.running_mean = Tensor({channels});
  l.running_var = Tensor({channels});
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_relu(NetworkGraph& net, const std::string& name, int input) {
  LayerSpec l;
  l.kind = LayerKind::Relu;
  l.name = name;
  l.inputs = {input};
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_maxpool(NetworkGraph& net, const std::string& name, int input, int k,
                int stride) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool2d;
  l.name = name;
  l.inputs = {input};
  l.pool_h = l.pool_w = k;
  l.pool_stride = stride;
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_avgpool(NetworkGraph& net, const std::string& name, int input, int k,
                int stride) {
  LayerSpec l;
  l.kind = LayerKind::AvgPool2d;
  l.name = name;
  l.inputs = {input};
  l.pool_h = l.pool_w = k;
  l.pool_stride = stride;
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_flatten(NetworkGraph& net, const std::string& name, int input) {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  l.name = name;
  l.inputs = {input};
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_linear(NetworkGraph& net, const std::string& name, int input, int in_f,
               int out_f) {
  LayerSpec l;
  l.kind = LayerKind::Linear;
  l.name = name;
  l.inputs = {input};
  l.in_features = in_f;
  l.out_features = out_f;
  l.weight = Tensor({out_f, in_f});
  l.bias = Tensor({out_f});
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

int add_residual(NetworkGraph& net, const std::string& name, int main_in,
                 int shortcut_in) {
  LayerSpec l;
  l.kind = LayerKind::ResidualAdd;
  l.name = name;
  l.inputs = {main_in, shortcut_in};
  net.layers.push_back(std::move(l));
  return static_cast<int>(net.layers.size()) - 1;
}

// Standard two-conv residual block. When the channel count or stride
// changes, the shortcut is a 1x1 projection conv followed by a norm layer.
int add_basic_block(NetworkGraph& net, const std::string& prefix, int input,
                    int in_c, int out_c, int stride) {
  int c1 = add_conv(net, prefix + ".conv1", input, in_c, out_c, 3, stride, 1);
  int b1 = add_bn(net, prefix + ".bn1", c1, out_c);
  int r1 = add_relu(net, prefix + ".relu1", b1);
  int c2 = add_conv(net, prefix + ".conv2", r1, out_c, out_c, 3, 1, 1);
  int b2 = add_bn(net, prefix + ".bn2", c2, out_c);
  int shortcut = input;
  if (in_c != out_c || stride != 1) {
    int sc = add_conv(net, prefix + ".sconv", input, in_c, out_c, 1, stride, 0);
    shortcut = add_bn(net, prefix + ".sbn", sc, out_c);
  }
  int add = add_residual(net, prefix + ".add", b2, shortcut);
  return add_relu(net, prefix + ".relu2", add);
}

}  // namespace

void init_parameters(NetworkGraph& net, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  for (LayerSpec& l : net.layers) {
    if (l.kind == LayerKind::Conv2d) {
      const float std_dev = std::sqrt(
          2.0f / static_cast<float>(l.in_channels * l.kernel_h * l.kernel_w));
      for (std::int64_t i = 0; i < l.weight.numel(); ++i)
        l.weight[i] = normal_float(rng, 0.0f, std_dev);
      l.bias.fill(0.0f);
    } else if (l.kind == LayerKind::Linear) {
      const float std_dev = std::sqrt(2.0f / static_cast<float>(l.in_features));
      for (std::int64_t i = 0; i < l.weight.numel(); ++i)
        l.weight[i] = normal_float(rng, 0.0f, std_dev);
      l.bias.fill(0.0f);
    } else if (l.kind == LayerKind::BatchNorm2d) {
      l.gamma.fill(1.0f);
      l.beta.fill(0.0f);
      l.running_mean.fill(0.0f);
      l.running_var.fill(1.0f);
      l.running_count = 0;
    }
  }
}

NetworkGraph build_cnn_small(int num_classes, std::uint64_t seed) {
  require(num_classes >= 2, ErrorCode::InvalidArgument, "need at least 2 classes");
  NetworkGraph net;
  net.input_shape = {3, 16, 16};
  int x = add_conv(net, "conv1", -1, 3, 16, 3, 1, 1);
  x = add_relu(net, "relu1", x);
  x = add_maxpool(net, "pool1", x, 2, 2);
  x = add_conv(net, "conv2", x, 16, 32, 3, 1, 1);
  x = add_relu(net, "relu2", x);
  x = add_maxpool(net, "pool2", x, 2, 2);
  x = add_conv(net, "conv3", x, 32, 64, 3, 1, 1);
  x = add_relu(net, "relu3", x);
  x = add_maxpool(net, "pool3", x, 2, 2);
  x = add_flatten(net, "flatten", x);
  add_linear(net, "head", x, 64 * 2 * 2, num_classes);
  init_parameters(net, seed);
  net.validate();
  return net;
}

NetworkGraph build_vgg_small(int num_classes, std::uint64_t seed) {
  require(num_classes >= 2, ErrorCode::InvalidArgument, "need at least 2 classes");
  NetworkGraph net;
  net.input_shape = {3, 16, 16};
  int x = -1;
  int in_c = 3;
  const int widths[3] = {32, 64, 96};
  for (int blk = 0; blk < 3; ++blk) {
    for (int sub = 1; sub <= 2; ++sub) {
      const std::string p = "b" + std::to_string(blk + 1) + std::to_string(sub);
      x = add_conv(net, p + ".conv", x, in_c, widths[blk], 3, 1, 1);
      x = add_bn(net, p + ".bn", x, widths[blk]);
      x = add_relu(net, p + ".relu", x);
      in_c = widths[blk];
    }
    x = add_maxpool(net, "pool" + std::to_string(blk + 1), x, 2, 2);
  }
  x = add_flatten(net, "flatten", x);
  add_linear(net, "head", x, 96 * 2 * 2, num_classes);
  init_parameters(net, seed);
  net.validate();
  return net;
}

NetworkGraph build_resnet_small(int num_classes, std::uint64_t seed) {
  require(num_classes >= 2, ErrorCode::InvalidArgument, "need at least 2 classes");
  NetworkGraph net;
  net.input_shape = {3, 8, 8};
  int x = add_conv(net, "stem.conv", -1, 3, 16, 3, 1, 1);
  x = add_bn(net, "stem.bn", x, 16);
  x = add_relu(net, "stem.relu", x);
  x = add_maxpool(net, "stem.pool", x, 2, 2);
  x = add_basic_block(net, "a", x, 16, 16, 1);
  x = add_basic_block(net, "b", x, 16, 32, 2);
  x = add_basic_block(net, "c", x, 32, 32, 1);
  x = add_basic_block(net, "d", x, 32, 64, 1);
  x = add_avgpool(net, "gap", x, 2, 2);
  x = add_flatten(net, "flatten", x);
  add_linear(net, "head", x, 64, num_classes);
  init_parameters(net, seed);
  net.validate();
  return net;
}

NetworkGraph build_preset(const std::string& preset, int num_classes,
                          std::uint64_t seed) {
  if (preset == "cnn-small") return build_cnn_small(num_classes, seed);
  if (preset == "vgg-small") return build_vgg_small(num_classes, seed);
  if (preset == "resnet-small") return build_resnet_small(num_classes, seed);
  fail(ErrorCode::InvalidArgument, "unknown preset: " + preset);
}

std::vector<std::string> preset_names() {
  return {"cnn-small", "vgg-small", "resnet-small"};
}

}  // namespace nexprune
