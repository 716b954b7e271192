#include "nexprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nexprune/error.hpp"

namespace nexprune {

namespace {
constexpr float kBnEps = 1e-5f;
constexpr float kBnMomentum = 0.1f;

int conv_out_extent(int in, int kernel, int stride, int padding) {
  int span = in + 2 * padding - kernel;
  require(span >= 0, ErrorCode::ShapeMismatch, "kernel larger than padded input");
  return span / stride + 1;
}

int pool_out_extent(int in, int window, int stride) {
  require(in >= window, ErrorCode::ShapeMismatch, "pool window larger than input");
  return (in - window) / stride + 1;
}
}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::BatchNorm2d: return "batchnorm2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::AvgPool2d: return "avgpool2d";
    case LayerKind::Linear: return "linear";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::ResidualAdd: return "residual-add";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv2d") return LayerKind::Conv2d;
  if (name == "batchnorm2d") return LayerKind::BatchNorm2d;
  if (name == "relu") return LayerKind::Relu;
  if (name == "maxpool2d") return LayerKind::MaxPool2d;
  if (name == "avgpool2d") return LayerKind::AvgPool2d;
  if (name == "linear") return LayerKind::Linear;
  if (name == "flatten") return LayerKind::Flatten;
  if (name == "residual-add") return LayerKind::ResidualAdd;
  fail(ErrorCode::InvalidArgument, "unknown layer kind: " + name);
}

int NetworkGraph::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == name) return static_cast<int>(i);
  fail(ErrorCode::InvalidArgument, "no layer named " + name);
}

std::vector<std::vector<int>> NetworkGraph::consumers() const {
  std::vector<std::vector<int>> out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (int in : layers[i].inputs)
      if (in >= 0) out[static_cast<std::size_t>(in)].push_back(static_cast<int>(i));
  return out;
}

int NetworkGraph::output_layer() const {
  auto cons = consumers();
  int out = -1;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (cons[i].empty()) {
      require(out < 0, ErrorCode::InvalidArgument,
              "network has more than one output layer");
      out = static_cast<int>(i);
    }
  }
  require(out >= 0, ErrorCode::InvalidArgument, "network has no output layer");
  return out;
}

std::vector<std::vector<int>> NetworkGraph::infer_shapes() const {
  require(input_shape.size() == 3, ErrorCode::InvalidArgument,
          "input_shape must be (channels, height, width)");
  std::vector<std::vector<int>> shapes(layers.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const LayerSpec& l = layers[li];
    require(!l.inputs.empty(), ErrorCode::InvalidArgument,
            "layer " + l.name + " has no inputs");
    auto in_shape = [&](int slot) -> const std::vector<int>& {
      int id = l.inputs[static_cast<std::size_t>(slot)];
      require(id < static_cast<int>(li), ErrorCode::InvalidArgument,
              "layer " + l.name + " consumes a later layer");
      return id < 0 ? input_shape : shapes[static_cast<std::size_t>(id)];
    };
    const std::vector<int>& a = in_shape(0);
    switch (l.kind) {
      case LayerKind::Conv2d: {
        require(a.size() == 3, ErrorCode::ShapeMismatch, l.name + ": conv input must be (C,H,W)");
        require(a[0] == l.in_channels, ErrorCode::ShapeMismatch,
                l.name + ": in_channels mismatch");
        shapes[li] = {l.out_channels,
                      conv_out_extent(a[1], l.kernel_h, l.stride, l.padding),
                      conv_out_extent(a[2], l.kernel_w, l.stride, l.padding)};
        break;
      }
      case LayerKind::BatchNorm2d:
        require(a.size() == 3, ErrorCode::ShapeMismatch, l.name + ": bn input must be (C,H,W)");
        require(a[0] == static_cast<int>(l.gamma.numel()), ErrorCode::ShapeMismatch,
                l.name + ": bn channel mismatch");
        shapes[li] = a;
        break;
      case LayerKind::Relu:
        shapes[li] = a;
        break;
      case LayerKind::MaxPool2d:
      case LayerKind::AvgPool2d:
        require(a.size() == 3, ErrorCode::ShapeMismatch, l.name + ": pool input must be (C,H,W)");
        shapes[li] = {a[0], pool_out_extent(a[1], l.pool_h, l.pool_stride),
                      pool_out_extent(a[2], l.pool_w, l.pool_stride)};
        break;
      case LayerKind::Linear: {
        require(a.size() == 1, ErrorCode::ShapeMismatch,
                l.name + ": linear input must be flattened");
        require(a[0] == l.in_features, ErrorCode::ShapeMismatch,
                l.name + ": in_features mismatch");
        shapes[li] = {l.out_features};
        break;
      }
      case LayerKind::Flatten: {
        require(a.size() == 3, ErrorCode::ShapeMismatch, l.name + ": flatten input must be (C,H,W)");
        shapes[li] = {a[0] * a[1] * a[2]};
        break;
      }
      case LayerKind::ResidualAdd: {
        require(l.inputs.size() == 2, ErrorCode::InvalidArgument,
                l.name + ": residual-add needs two inputs");
        const std::vector<int>& b = in_shape(1);
        require(a == b, ErrorCode::ShapeMismatch,
                l.name + ": residual operands must have identical shapes");
        shapes[li] = a;
        break;
      }
    }
  }
  return shapes;
}

void NetworkGraph::validate() const {
  infer_shapes();
  output_layer();
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::Conv2d) {
      require(l.weight.shape() ==
                  std::vector<int>({l.out_channels, l.in_channels, l.kernel_h, l.kernel_w}),
              ErrorCode::ShapeMismatch, l.name + ": conv weight shape");
      require(l.bias.numel() == l.out_channels, ErrorCode::ShapeMismatch,
              l.name + ": conv bias shape");
    } else if (l.kind == LayerKind::Linear) {
      require(l.weight.shape() == std::vector<int>({l.out_features, l.in_features}),
              ErrorCode::ShapeMismatch, l.name + ": linear weight shape");
      require(l.bias.numel() == l.out_features, ErrorCode::ShapeMismatch,
              l.name + ": linear bias shape");
    } else if (l.kind == LayerKind::BatchNorm2d) {
      std::int64_t c = l.gamma.numel();
      require(l.beta.numel() == c && l.running_mean.numel() == c &&
                  l.running_var.numel() == c,
              ErrorCode::ShapeMismatch, l.name + ": bn parameter vectors disagree");
    }
  }
}

std::vector<int> NetworkGraph::conv_layers() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::Conv2d) out.push_back(static_cast<int>(i));
  return out;
}

int NetworkGraph::capture_point(int conv_id) const {
  auto cons = consumers();
  int cur = conv_id;
  // Bounded walk; the graph is acyclic so layers.size() steps suffice.
  for (std::size_t guard = 0; guard <= layers.size(); ++guard) {
    int relu = -1, next = -1;
    int pass_throughs = 0;
    for (int c : cons[static_cast<std::size_t>(cur)]) {
      LayerKind k = layers[static_cast<std::size_t>(c)].kind;
      if (k == LayerKind::Relu && relu < 0) relu = c;
      if (k == LayerKind::BatchNorm2d || k == LayerKind::ResidualAdd) {
        ++pass_throughs;
        if (next < 0) next = c;
      }
    }
    if (relu >= 0) return relu;
    if (pass_throughs != 1) return cur;  // no (or ambiguous) continuation
    cur = next;
  }
  return cur;
}

std::map<int, int> NetworkGraph::capture_points() const {
  std::map<int, int> out;
  for (int c : conv_layers()) out[c] = capture_point(c);
  return out;
}

const Tensor& ActivationStore::for_conv(int conv_id) const {
  auto it = conv_to_point.find(conv_id);
  require(it != conv_to_point.end(), ErrorCode::InvalidArgument,
          "no capture recorded for conv layer " + std::to_string(conv_id));
  return captured.at(it->second);
}

namespace {

// Direct convolution. Accumulation order per output element is fixed
// kernel-major: (in_channel, ky, kx), bias first.
void conv2d_forward(const LayerSpec& l, const Tensor& in, Tensor& out) {
  const int n = in.dim(0), ic = l.in_channels, ih = in.dim(2), iw = in.dim(3);
  const int oc = l.out_channels, oh = out.dim(2), ow = out.dim(3);
  const int kh = l.kernel_h, kw = l.kernel_w, s = l.stride, p = l.padding;
  const float* W = l.weight.data();
  for (int b = 0; b < n; ++b) {
    const float* in_b = in.data() + in.idx4(b, 0, 0, 0);
    float* out_b = out.data() + out.idx4(b, 0, 0, 0);
    for (int o = 0; o < oc; ++o) {
      float* out_map = out_b + static_cast<std::size_t>(o) * oh * ow;
      const float bias = l.bias[o];
      for (int i = 0; i < oh * ow; ++i) out_map[i] = bias;
      const float* w_o = W + static_cast<std::size_t>(o) * ic * kh * kw;
      for (int c = 0; c < ic; ++c) {
        const float* in_map = in_b + static_cast<std::size_t>(c) * ih * iw;
        const float* w_c = w_o + static_cast<std::size_t>(c) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const float w = w_c[ky * kw + kx];
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s + ky - p;
              if (iy < 0 || iy >= ih) continue;
              const float* in_row = in_map + static_cast<std::size_t>(iy) * iw;
              float* out_row = out_map + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * s + kx - p;
                if (ix < 0 || ix >= iw) continue;
                out_row[ox] += w * in_row[ix];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const LayerSpec& l, const Tensor& in, const Tensor& gout,
                     Tensor& gin, Tensor& gw, Tensor& gb) {
  const int n = in.dim(0), ic = l.in_channels, ih = in.dim(2), iw = in.dim(3);
  const int oc = l.out_channels, oh = gout.dim(2), ow = gout.dim(3);
  const int kh = l.kernel_h, kw = l.kernel_w, s = l.stride, p = l.padding;
  const float* W = l.weight.data();
  for (int b = 0; b < n; ++b) {
    const float* in_b = in.data() + in.idx4(b, 0, 0, 0);
    const float* go_b = gout.data() + gout.idx4(b, 0, 0, 0);
    float* gi_b = gin.data() + gin.idx4(b, 0, 0, 0);
    for (int o = 0; o < oc; ++o) {
      const float* go_map = go_b + static_cast<std::size_t>(o) * oh * ow;
      double gb_acc = 0.0;
      for (int i = 0; i < oh * ow; ++i) gb_acc += go_map[i];
      gb[o] += static_cast<float>(gb_acc);
      const float* w_o = W + static_cast<std::size_t>(o) * ic * kh * kw;
      float* gw_o = gw.data() + static_cast<std::size_t>(o) * ic * kh * kw;
      for (int c = 0; c < ic; ++c) {
        const float* in_map = in_b + static_cast<std::size_t>(c) * ih * iw;
        float* gi_map = gi_b + static_cast<std::size_t>(c) * ih * iw;
        const float* w_c = w_o + static_cast<std::size_t>(c) * kh * kw;
        float* gw_c = gw_o + static_cast<std::size_t>(c) * kh * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const float w = w_c[ky * kw + kx];
            double gw_acc = 0.0;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s + ky - p;
              if (iy < 0 || iy >= ih) continue;
              const float* in_row = in_map + static_cast<std::size_t>(iy) * iw;
              float* gi_row = gi_map + static_cast<std::size_t>(iy) * iw;
              const float* go_row = go_map + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * s + kx - p;
                if (ix < 0 || ix >= iw) continue;
                gw_acc += static_cast<double>(go_row[ox]) * in_row[ix];
                gi_row[ix] += w * go_row[ox];
              }
            }
            gw_c[ky * kw + kx] += static_cast<float>(gw_acc);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor forward(NetworkGraph& net, const Tensor& batch, RunMode mode,
               const CaptureConfig* capture, ActivationStore* store,
               ForwardCache* cache) {
  require(batch.rank() == 4, ErrorCode::ShapeMismatch, "batch must be (N,C,H,W)");
  require(batch.dim(1) == net.input_shape[0] && batch.dim(2) == net.input_shape[1] &&
              batch.dim(3) == net.input_shape[2],
          ErrorCode::ShapeMismatch, "batch shape does not match network input");
  const int n = batch.dim(0);
  auto shapes = net.infer_shapes();

  std::vector<Tensor> outs(net.layers.size());
  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.mode = mode;
  cc.bn_xhat.assign(net.layers.size(), {});
  cc.bn_inv_std.assign(net.layers.size(), {});
  cc.bn_mean.assign(net.layers.size(), {});
  cc.pool_argmax.assign(net.layers.size(), {});
  if (cache) cc.input = batch;

  auto tensor_for = [&](int id) -> const Tensor& {
    return id < 0 ? batch : outs[static_cast<std::size_t>(id)];
  };

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    LayerSpec& l = net.layers[li];
    const Tensor& in = tensor_for(l.inputs[0]);
    const std::vector<int>& os = shapes[li];
    std::vector<int> full_shape;
    full_shape.reserve(os.size() + 1);
    full_shape.push_back(n);
    full_shape.insert(full_shape.end(), os.begin(), os.end());
    Tensor out(full_shape);

    switch (l.kind) {
      case LayerKind::Conv2d:
        conv2d_forward(l, in, out);
        break;
      case LayerKind::BatchNorm2d: {
        const int c = in.dim(1), h = in.dim(2), w = in.dim(3);
        const std::int64_t m = static_cast<std::int64_t>(n) * h * w;
        const bool use_batch_stats =
            (mode == RunMode::Train) || (l.running_count == 0);
        std::vector<float>& mean = cc.bn_mean[li];
        std::vector<float>& inv_std = cc.bn_inv_std[li];
        mean.assign(static_cast<std::size_t>(c), 0.0f);
        inv_std.assign(static_cast<std::size_t>(c), 0.0f);
        std::vector<float> var(static_cast<std::size_t>(c), 0.0f);
        if (use_batch_stats) {
          for (int ch = 0; ch < c; ++ch) {
            double sum = 0.0, sq = 0.0;
            for (int b = 0; b < n; ++b) {
              const float* p = in.data() + in.idx4(b, ch, 0, 0);
              for (int i = 0; i < h * w; ++i) {
                sum += p[i];
                sq += static_cast<double>(p[i]) * p[i];
              }
            }
            const double mu = sum / static_cast<double>(m);
            const double v = sq / static_cast<double>(m) - mu * mu;
            mean[static_cast<std::size_t>(ch)] = static_cast<float>(mu);
            var[static_cast<std::size_t>(ch)] = static_cast<float>(std::max(v, 0.0));
          }
          if (mode == RunMode::Train) {
            // Running stats keep the unbiased variance.
            const double unbias =
                m > 1 ? static_cast<double>(m) / static_cast<double>(m - 1) : 1.0;
            for (int ch = 0; ch < c; ++ch) {
              l.running_mean[ch] = (1.0f - kBnMomentum) * l.running_mean[ch] +
                                   kBnMomentum * mean[static_cast<std::size_t>(ch)];
              l.running_var[ch] =
                  (1.0f - kBnMomentum) * l.running_var[ch] +
                  kBnMomentum *
                      static_cast<float>(var[static_cast<std::size_t>(ch)] * unbias);
            }
            l.running_count += 1;
          }
        } else {
          for (int ch = 0; ch < c; ++ch) {
            mean[static_cast<std::size_t>(ch)] = l.running_mean[ch];
            var[static_cast<std::size_t>(ch)] = l.running_var[ch];
          }
        }
        for (int ch = 0; ch < c; ++ch)
          inv_std[static_cast<std::size_t>(ch)] =
              1.0f / std::sqrt(var[static_cast<std::size_t>(ch)] + kBnEps);
        const bool keep_xhat = cache && mode == RunMode::Train;
        if (keep_xhat) cc.bn_xhat[li] = Tensor(out.shape());
        for (int b = 0; b < n; ++b) {
          for (int ch = 0; ch < c; ++ch) {
            const float mu = mean[static_cast<std::size_t>(ch)];
            const float is = inv_std[static_cast<std::size_t>(ch)];
            const float g = l.gamma[ch], be = l.beta[ch];
            const float* p = in.data() + in.idx4(b, ch, 0, 0);
            float* q = out.data() + out.idx4(b, ch, 0, 0);
            float* xh = keep_xhat ? cc.bn_xhat[li].data() + out.idx4(b, ch, 0, 0)
                                  : nullptr;
            for (int i = 0; i < h * w; ++i) {
              const float xhat = (p[i] - mu) * is;
              if (xh) xh[i] = xhat;
              q[i] = g * xhat + be;
            }
          }
        }
        break;
      }
      case LayerKind::Relu: {
        const float* p = in.data();
        float* q = out.data();
        const std::int64_t total = in.numel();
        for (std::int64_t i = 0; i < total; ++i) q[i] = p[i] > 0.0f ? p[i] : 0.0f;
        break;
      }
      case LayerKind::MaxPool2d: {
        const int c = in.dim(1), ih = in.dim(2), iw = in.dim(3);
        const int oh = out.dim(2), ow = out.dim(3);
        std::vector<int>& argmax = cc.pool_argmax[li];
        if (cache) argmax.assign(static_cast<std::size_t>(out.numel()), 0);
        std::size_t oi = 0;
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox, ++oi) {
                float best = -std::numeric_limits<float>::infinity();
                int best_idx = 0;
                for (int ky = 0; ky < l.pool_h; ++ky)
                  for (int kx = 0; kx < l.pool_w; ++kx) {
                    const int iy = oy * l.pool_stride + ky;
                    const int ix = ox * l.pool_stride + kx;
                    const float v = in.at4(b, ch, iy, ix);
                    if (v > best) {
                      best = v;
                      best_idx = (iy * iw + ix);
                    }
                  }
                out.at4(b, ch, oy, ox) = best;
                if (cache) argmax[oi] = best_idx;
              }
        (void)ih;
        break;
      }
      case LayerKind::AvgPool2d: {
        const int c = in.dim(1);
        const int oh = out.dim(2), ow = out.dim(3);
        const float norm = 1.0f / static_cast<float>(l.pool_h * l.pool_w);
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox) {
                float acc = 0.0f;
                for (int ky = 0; ky < l.pool_h; ++ky)
                  for (int kx = 0; kx < l.pool_w; ++kx)
                    acc += in.at4(b, ch, oy * l.pool_stride + ky,
                                  ox * l.pool_stride + kx);
                out.at4(b, ch, oy, ox) = acc * norm;
              }
        break;
      }
      case LayerKind::Linear: {
        const int in_f = l.in_features, out_f = l.out_features;
        for (int b = 0; b < n; ++b) {
          const float* x = in.data() + static_cast<std::size_t>(b) * in_f;
          float* y = out.data() + static_cast<std::size_t>(b) * out_f;
          for (int o = 0; o < out_f; ++o) {
            const float* w = l.weight.data() + static_cast<std::size_t>(o) * in_f;
            float acc = l.bias[o];
            for (int i = 0; i < in_f; ++i) acc += w[i] * x[i];
            y[o] = acc;
          }
        }
        break;
      }
      case LayerKind::Flatten: {
        std::memcpy(out.data(), in.data(),
                    static_cast<std::size_t>(in.numel()) * sizeof(float));
        break;
      }
      case LayerKind::ResidualAdd: {
        const Tensor& rhs = tensor_for(l.inputs[1]);
        const float* p = in.data();
        const float* r = rhs.data();
        float* q = out.data();
        const std::int64_t total = in.numel();
        for (std::int64_t i = 0; i < total; ++i) q[i] = p[i] + r[i];
        break;
      }
    }
    check_finite(out, "layer " + l.name);
    outs[li] = std::move(out);
  }

  if (store) {
    store->captured.clear();
    store->conv_to_point.clear();
    auto points = net.capture_points();
    for (const auto& [conv_id, point] : points) {
      bool wanted = capture == nullptr || capture->capture_all_convs;
      if (!wanted && capture) {
        wanted = std::find(capture->conv_ids.begin(), capture->conv_ids.end(),
                           conv_id) != capture->conv_ids.end();
      }
      if (!wanted) continue;
      store->conv_to_point[conv_id] = point;
      if (!store->captured.count(point))
        store->captured[point] = outs[static_cast<std::size_t>(point)];
    }
  }

  Tensor result = outs[static_cast<std::size_t>(net.output_layer())];
  if (cache) cc.outputs = std::move(outs);
  return result;
}

GradientStore backward(NetworkGraph& net, const ForwardCache& cache,
                       const Tensor& loss_grad) {
  require(!cache.outputs.empty(), ErrorCode::InvalidArgument,
          "backward called without a cached forward pass");
  const int out_layer = net.output_layer();
  require(loss_grad.same_shape(cache.outputs[static_cast<std::size_t>(out_layer)]),
          ErrorCode::ShapeMismatch, "loss gradient shape mismatch");

  GradientStore grads;
  grads.layers.resize(net.layers.size());
  std::vector<Tensor> gout(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    gout[i] = Tensor(cache.outputs[i].shape());
  }
  gout[static_cast<std::size_t>(out_layer)] = loss_grad;

  Tensor grad_input(cache.input.shape());

  auto input_tensor = [&](int id) -> const Tensor& {
    return id < 0 ? cache.input : cache.outputs[static_cast<std::size_t>(id)];
  };
  auto input_grad = [&](int id) -> Tensor& {
    return id < 0 ? grad_input : gout[static_cast<std::size_t>(id)];
  };

  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(li)];
    const Tensor& go = gout[static_cast<std::size_t>(li)];
    const Tensor& in = input_tensor(l.inputs[0]);
    Tensor& gi = input_grad(l.inputs[0]);
    GradientStore::LayerGrads& lg = grads.layers[static_cast<std::size_t>(li)];
    const int n = go.dim(0);

    switch (l.kind) {
      case LayerKind::Conv2d: {
        lg.weight = Tensor(l.weight.shape());
        lg.bias = Tensor(l.bias.shape());
        conv2d_backward(l, in, go, gi, lg.weight, lg.bias);
        break;
      }
      case LayerKind::BatchNorm2d: {
        const int c = in.dim(1), h = in.dim(2), w = in.dim(3);
        const std::int64_t m = static_cast<std::int64_t>(n) * h * w;
        lg.gamma = Tensor(l.gamma.shape());
        lg.beta = Tensor(l.beta.shape());
        const auto& inv_std = cache.bn_inv_std[static_cast<std::size_t>(li)];
        if (cache.mode == RunMode::Train) {
          const Tensor& xhat = cache.bn_xhat[static_cast<std::size_t>(li)];
          for (int ch = 0; ch < c; ++ch) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int b = 0; b < n; ++b) {
              const float* dy = go.data() + go.idx4(b, ch, 0, 0);
              const float* xh = xhat.data() + xhat.idx4(b, ch, 0, 0);
              for (int i = 0; i < h * w; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * xh[i];
              }
            }
            lg.beta[ch] = static_cast<float>(sum_dy);
            lg.gamma[ch] = static_cast<float>(sum_dy_xhat);
            const float g = l.gamma[ch];
            const float is = inv_std[static_cast<std::size_t>(ch)];
            const float k1 = static_cast<float>(sum_dy / static_cast<double>(m));
            const float k2 =
                static_cast<float>(sum_dy_xhat / static_cast<double>(m));
            for (int b = 0; b < n; ++b) {
              const float* dy = go.data() + go.idx4(b, ch, 0, 0);
              const float* xh = xhat.data() + xhat.idx4(b, ch, 0, 0);
              float* dx = gi.data() + gi.idx4(b, ch, 0, 0);
              for (int i = 0; i < h * w; ++i)
                dx[i] += g * is * (dy[i] - k1 - xh[i] * k2);
            }
          }
        } else {
          // Eval-mode statistics are constants.
          const auto& mean = cache.bn_mean[static_cast<std::size_t>(li)];
          for (int ch = 0; ch < c; ++ch) {
            const float is = inv_std[static_cast<std::size_t>(ch)];
            const float mu = mean[static_cast<std::size_t>(ch)];
            const float g = l.gamma[ch];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int b = 0; b < n; ++b) {
              const float* dy = go.data() + go.idx4(b, ch, 0, 0);
              const float* x = in.data() + in.idx4(b, ch, 0, 0);
              float* dx = gi.data() + gi.idx4(b, ch, 0, 0);
              for (int i = 0; i < h * w; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += static_cast<double>(dy[i]) * (x[i] - mu) * is;
                dx[i] += g * is * dy[i];
              }
            }
            lg.beta[ch] = static_cast<float>(sum_dy);
            lg.gamma[ch] = static_cast<float>(sum_dy_xhat);
          }
        }
        break;
      }
      case LayerKind::Relu: {
        const float* x = in.data();
        const float* dy = go.data();
        float* dx = gi.data();
        const std::int64_t total = in.numel();
        for (std::int64_t i = 0; i < total; ++i)
          dx[i] += x[i] > 0.0f ? dy[i] : 0.0f;
        break;
      }
      case LayerKind::MaxPool2d: {
        const int c = in.dim(1), iw = in.dim(3);
        const int oh = go.dim(2), ow = go.dim(3);
        const auto& argmax = cache.pool_argmax[static_cast<std::size_t>(li)];
        require(!argmax.empty(), ErrorCode::InvalidArgument,
                "maxpool backward without cached argmax");
        std::size_t oi = 0;
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch) {
            float* gi_map = gi.data() + gi.idx4(b, ch, 0, 0);
            const float* go_map = go.data() + go.idx4(b, ch, 0, 0);
            for (int i = 0; i < oh * ow; ++i, ++oi)
              gi_map[argmax[oi]] += go_map[i];
          }
        (void)iw;
        break;
      }
      case LayerKind::AvgPool2d: {
        const int c = in.dim(1);
        const int oh = go.dim(2), ow = go.dim(3);
        const float norm = 1.0f / static_cast<float>(l.pool_h * l.pool_w);
        for (int b = 0; b < n; ++b)
          for (int ch = 0; ch < c; ++ch)
            for (int oy = 0; oy < oh; ++oy)
              for (int ox = 0; ox < ow; ++ox) {
                const float d = go.at4(b, ch, oy, ox) * norm;
                for (int ky = 0; ky < l.pool_h; ++ky)
                  for (int kx = 0; kx < l.pool_w; ++kx)
                    gi.at4(b, ch, oy * l.pool_stride + ky,
                           ox * l.pool_stride + kx) += d;
              }
        break;
      }
      case LayerKind::Linear: {
        const int in_f = l.in_features, out_f = l.out_features;
        lg.weight = Tensor(l.weight.shape());
        lg.bias = Tensor(l.bias.shape());
        for (int b = 0; b < n; ++b) {
          const float* x = in.data() + static_cast<std::size_t>(b) * in_f;
          const float* dy = go.data() + static_cast<std::size_t>(b) * out_f;
          float* dx = gi.data() + static_cast<std::size_t>(b) * in_f;
          for (int o = 0; o < out_f; ++o) {
            const float d = dy[o];
            lg.bias[o] += d;
            float* gw = lg.weight.data() + static_cast<std::size_t>(o) * in_f;
            const float* w = l.weight.data() + static_cast<std::size_t>(o) * in_f;
            for (int i = 0; i < in_f; ++i) {
              gw[i] += d * x[i];
              dx[i] += d * w[i];
            }
          }
        }
        break;
      }
      case LayerKind::Flatten: {
        float* dx = gi.data();
        const float* dy = go.data();
        const std::int64_t total = go.numel();
        for (std::int64_t i = 0; i < total; ++i) dx[i] += dy[i];
        break;
      }
      case LayerKind::ResidualAdd: {
        Tensor& gi2 = input_grad(l.inputs[1]);
        const float* dy = go.data();
        float* a = gi.data();
        float* b2 = gi2.data();
        const std::int64_t total = go.numel();
        for (std::int64_t i = 0; i < total; ++i) {
          a[i] += dy[i];
          b2[i] += dy[i];
        }
        break;
      }
    }
    for (const Tensor* t : {&lg.weight, &lg.bias, &lg.gamma, &lg.beta})
      if (!t->empty()) check_finite(*t, "grad of layer " + l.name);
  }
  grads.input = std::move(grad_input);
  return grads;
}

void sgd_step(NetworkGraph& net, const GradientStore& grads, float lr) {
  require(grads.layers.size() == net.layers.size(), ErrorCode::ShapeMismatch,
          "gradient store does not match network");
  auto apply = [lr](Tensor& p, const Tensor& g, const std::string& name) {
    if (p.empty() && g.empty()) return;
    require(p.same_shape(g), ErrorCode::ShapeMismatch,
            "gradient shape mismatch for " + name);
    float* pd = p.data();
    const float* gd = g.data();
    const std::int64_t total = p.numel();
    for (std::int64_t i = 0; i < total; ++i) pd[i] -= lr * gd[i];
  };
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    LayerSpec& l = net.layers[i];
    const auto& lg = grads.layers[i];
    if (lg.weight.empty() && lg.bias.empty() && lg.gamma.empty() && lg.beta.empty())
      continue;
    apply(l.weight, lg.weight, l.name + ".weight");
    apply(l.bias, lg.bias, l.name + ".bias");
    apply(l.gamma, lg.gamma, l.name + ".gamma");
    apply(l.beta, lg.beta, l.name + ".beta");
  }
}

std::pair<double, Tensor> cross_entropy_loss(const Tensor& logits,
                                             const std::vector<int>& labels) {
  require(logits.rank() == 2, ErrorCode::ShapeMismatch, "logits must be (N,C)");
  const int n = logits.dim(0), c = logits.dim(1);
  require(static_cast<int>(labels.size()) == n, ErrorCode::ShapeMismatch,
          "label count does not match logits rows");
  Tensor grad(logits.shape());
  double loss = 0.0;
  std::vector<double> p(static_cast<std::size_t>(c));
  for (int b = 0; b < n; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    require(y >= 0 && y < c, ErrorCode::InvalidArgument,
            "label index out of range");
    const float* row = logits.data() + static_cast<std::size_t>(b) * c;
    double mx = row[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, static_cast<double>(row[i]));
    double z = 0.0;
    for (int i = 0; i < c; ++i) {
      p[static_cast<std::size_t>(i)] = std::exp(row[i] - mx);
      z += p[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < c; ++i) p[static_cast<std::size_t>(i)] /= z;
    loss -= std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    float* g = grad.data() + static_cast<std::size_t>(b) * c;
    for (int i = 0; i < c; ++i)
      g[i] = static_cast<float>((p[static_cast<std::size_t>(i)] - (i == y ? 1.0 : 0.0)) /
                                static_cast<double>(n));
  }
  loss /= static_cast<double>(n);
  return {loss, grad};
}

}  // namespace nexprune
