#include "nexprune/model_graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "nexprune/error.hpp"

namespace nexprune {

namespace {

// Union-find keyed by (conv layer, channel) anchor.
struct AnchorUnion {
  std::map<std::pair<int, int>, std::pair<int, int>> parent;

  std::pair<int, int> find(std::pair<int, int> a) {
    auto it = parent.find(a);
    if (it == parent.end()) {
      parent[a] = a;
      return a;
    }
    if (it->second == a) return a;
    auto root = find(it->second);
    parent[a] = root;
    return root;
  }

  void unite(std::pair<int, int> a, std::pair<int, int> b) {
    auto ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rb < ra) std::swap(ra, rb);
    parent[rb] = ra;  // smaller (layer, channel) wins, keeps ordering stable
  }
};

// Conv anchors that produce channel `ch` of layer `layer_id`, traced
// through channel-preserving layers. Channels arriving straight from the
// network input have no anchor.
void trace_anchors(const NetworkGraph& net, int layer_id, int ch,
                   std::vector<std::pair<int, int>>& out) {
  if (layer_id < 0) return;
  const LayerSpec& l = net.layers[static_cast<std::size_t>(layer_id)];
  switch (l.kind) {
    case LayerKind::Conv2d:
      out.emplace_back(layer_id, ch);
      return;
    case LayerKind::BatchNorm2d:
    case LayerKind::Relu:
    case LayerKind::MaxPool2d:
    case LayerKind::AvgPool2d:
      trace_anchors(net, l.inputs[0], ch, out);
      return;
    case LayerKind::ResidualAdd:
      trace_anchors(net, l.inputs[0], ch, out);
      trace_anchors(net, l.inputs[1], ch, out);
      return;
    case LayerKind::Linear:
    case LayerKind::Flatten:
      fail(ErrorCode::InvalidArgument,
           "channel trace crossed a non-spatial layer: " + l.name);
  }
}

// Convs whose output channels define the network output dimensionality.
// Walk back from the output layer through parameter-free and norm layers;
// a linear head absorbs any channel change, so nothing is protected there.
std::set<int> protected_convs(const NetworkGraph& net) {
  std::set<int> out;
  std::vector<int> stack = {net.output_layer()};
  std::set<int> seen;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (id < 0 || !seen.insert(id).second) continue;
    const LayerSpec& l = net.layers[static_cast<std::size_t>(id)];
    if (l.kind == LayerKind::Conv2d) {
      out.insert(id);
      continue;
    }
    if (l.kind == LayerKind::Linear) continue;
    for (int in : l.inputs) stack.push_back(in);
  }
  return out;
}

}  // namespace

std::vector<CouplingGroup> coupling_groups(const NetworkGraph& net) {
  auto shapes = net.infer_shapes();
  auto cons = net.consumers();

  AnchorUnion uf;
  for (int conv : net.conv_layers()) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(conv)];
    for (int k = 0; k < l.out_channels; ++k) uf.find({conv, k});
  }

  // Residual adds force their per-channel producers into one group.
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& l = net.layers[li];
    if (l.kind != LayerKind::ResidualAdd) continue;
    const int channels = shapes[li][0];
    for (int ch = 0; ch < channels; ++ch) {
      std::vector<std::pair<int, int>> anchors;
      trace_anchors(net, static_cast<int>(li), ch, anchors);
      for (std::size_t i = 1; i < anchors.size(); ++i)
        uf.unite(anchors[0], anchors[i]);
    }
  }

  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> members;
  for (int conv : net.conv_layers()) {
    const LayerSpec& l = net.layers[static_cast<std::size_t>(conv)];
    for (int k = 0; k < l.out_channels; ++k)
      members[uf.find({conv, k})].emplace_back(conv, k);
  }

  const std::set<int> prot = protected_convs(net);

  std::vector<CouplingGroup> groups;
  groups.reserve(members.size());
  for (auto& [root, anchors] : members) {
    CouplingGroup g;
    std::sort(anchors.begin(), anchors.end());
    g.anchors = anchors;

    std::set<std::tuple<int, int, int, int>> slice_set;
    std::set<std::pair<int, int>> visited;  // (layer, channel) walk states

    // Downstream walk from (layer, channel): collect every parameter slice
    // the channel touches until a channel-mixing consumer absorbs it.
    auto walk = [&](auto&& self, int layer_id, int ch) -> void {
      if (!visited.insert({layer_id, ch}).second) return;
      for (int c : cons[static_cast<std::size_t>(layer_id)]) {
        const LayerSpec& cl = net.layers[static_cast<std::size_t>(c)];
        switch (cl.kind) {
          case LayerKind::Conv2d:
            slice_set.insert({c, 1, ch, ch + 1});
            break;
          case LayerKind::BatchNorm2d:
            slice_set.insert({c, 0, ch, ch + 1});
            self(self, c, ch);
            break;
          case LayerKind::Relu:
          case LayerKind::MaxPool2d:
          case LayerKind::AvgPool2d:
          case LayerKind::ResidualAdd:
            self(self, c, ch);
            break;
          case LayerKind::Flatten: {
            // Flat features of channel ch span [ch*H*W, (ch+1)*H*W).
            const int in_id = cl.inputs[0];
            require(in_id >= 0, ErrorCode::InvalidArgument,
                    "flatten directly on the network input");
            const auto& s = shapes[static_cast<std::size_t>(in_id)];
            const int hw = s[1] * s[2];
            for (int fc : cons[static_cast<std::size_t>(c)]) {
              const LayerSpec& fl = net.layers[static_cast<std::size_t>(fc)];
              require(fl.kind == LayerKind::Linear, ErrorCode::InvalidArgument,
                      "flatten output must feed a linear layer");
              slice_set.insert({fc, 1, ch * hw, (ch + 1) * hw});
            }
            break;
          }
          case LayerKind::Linear:
            fail(ErrorCode::InvalidArgument,
                 "conv channel feeds a linear layer without flatten");
        }
      }
    };

    for (const auto& [conv, k] : anchors) {
      slice_set.insert({conv, 0, k, k + 1});
      walk(walk, conv, k);
      if (prot.count(conv)) g.protected_group = true;
    }

    for (const auto& [layer, axis, begin, end] : slice_set)
      g.slices.push_back({layer, axis, begin, end});
    groups.push_back(std::move(g));
  }
  return groups;
}

void zero_group(NetworkGraph& net, const CouplingGroup& group) {
  for (const SliceRef& s : group.slices) {
    LayerSpec& l = net.layers[static_cast<std::size_t>(s.layer)];
    if (s.axis == 0) {
      if (l.kind == LayerKind::Conv2d) {
        const std::int64_t row =
            static_cast<std::int64_t>(l.in_channels) * l.kernel_h * l.kernel_w;
        for (int r = s.begin; r < s.end; ++r) {
          float* p = l.weight.data() + static_cast<std::size_t>(r) * row;
          for (std::int64_t i = 0; i < row; ++i) p[i] = 0.0f;
          l.bias[r] = 0.0f;
        }
      } else if (l.kind == LayerKind::BatchNorm2d) {
        for (int r = s.begin; r < s.end; ++r) {
          l.gamma[r] = 0.0f;
          l.beta[r] = 0.0f;
        }
      } else if (l.kind == LayerKind::Linear) {
        for (int r = s.begin; r < s.end; ++r) {
          float* p = l.weight.data() + static_cast<std::size_t>(r) * l.in_features;
          for (int i = 0; i < l.in_features; ++i) p[i] = 0.0f;
          l.bias[r] = 0.0f;
        }
      }
    } else {
      if (l.kind == LayerKind::Conv2d) {
        const std::int64_t k2 = static_cast<std::int64_t>(l.kernel_h) * l.kernel_w;
        for (int oc = 0; oc < l.out_channels; ++oc)
          for (int icn = s.begin; icn < s.end; ++icn) {
            float* p = l.weight.data() +
                       (static_cast<std::size_t>(oc) * l.in_channels + icn) * k2;
            for (std::int64_t i = 0; i < k2; ++i) p[i] = 0.0f;
          }
      } else if (l.kind == LayerKind::Linear) {
        for (int r = 0; r < l.out_features; ++r) {
          float* p = l.weight.data() + static_cast<std::size_t>(r) * l.in_features;
          for (int c = s.begin; c < s.end; ++c) p[c] = 0.0f;
        }
      }
    }
  }
}

namespace {

Tensor gather_rows(const Tensor& t, const std::vector<int>& keep,
                   std::int64_t row_size) {
  std::vector<int> shape = t.shape();
  shape[0] = static_cast<int>(keep.size());
  Tensor out(shape);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const float* src = t.data() + static_cast<std::size_t>(keep[r]) * row_size;
    float* dst = out.data() + r * row_size;
    std::copy(src, src + row_size, dst);
  }
  return out;
}

std::vector<int> keep_list(int n, const std::set<int>& removed) {
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    if (!removed.count(i)) keep.push_back(i);
  return keep;
}

}  // namespace

NetworkGraph apply_prune(const NetworkGraph& net,
                         const std::vector<CouplingGroup>& groups) {
  // Per-layer removal masks, split by axis.
  std::map<int, std::set<int>> removed_out, removed_in;
  for (const CouplingGroup& g : groups) {
    require(!g.protected_group, ErrorCode::InvalidArgument,
            "cannot remove a group that defines the output dimension");
    for (const SliceRef& s : g.slices)
      for (int i = s.begin; i < s.end; ++i)
        (s.axis == 0 ? removed_out : removed_in)[s.layer].insert(i);
  }

  NetworkGraph out = net;
  for (std::size_t li = 0; li < out.layers.size(); ++li) {
    LayerSpec& l = out.layers[li];
    const auto ro = removed_out.find(static_cast<int>(li));
    const auto ri = removed_in.find(static_cast<int>(li));
    const std::set<int> none;
    const std::set<int>& drop_out = ro == removed_out.end() ? none : ro->second;
    const std::set<int>& drop_in = ri == removed_in.end() ? none : ri->second;
    if (drop_out.empty() && drop_in.empty()) continue;

    if (l.kind == LayerKind::Conv2d) {
      const std::vector<int> keep_out = keep_list(l.out_channels, drop_out);
      const std::vector<int> keep_in = keep_list(l.in_channels, drop_in);
      require(!keep_out.empty(), ErrorCode::LayerCollapse,
              "pruning would remove every filter of " + l.name);
      require(!keep_in.empty(), ErrorCode::LayerCollapse,
              "pruning would remove every input channel of " + l.name);
      const std::int64_t k2 = static_cast<std::int64_t>(l.kernel_h) * l.kernel_w;
      Tensor w({static_cast<int>(keep_out.size()), static_cast<int>(keep_in.size()),
                l.kernel_h, l.kernel_w});
      for (std::size_t o = 0; o < keep_out.size(); ++o)
        for (std::size_t c = 0; c < keep_in.size(); ++c) {
          const float* src =
              l.weight.data() +
              (static_cast<std::size_t>(keep_out[o]) * l.in_channels + keep_in[c]) * k2;
          float* dst = w.data() + (o * keep_in.size() + c) * k2;
          std::copy(src, src + k2, dst);
        }
      l.weight = std::move(w);
      l.bias = gather_rows(l.bias, keep_out, 1);
      l.out_channels = static_cast<int>(keep_out.size());
      l.in_channels = static_cast<int>(keep_in.size());
    } else if (l.kind == LayerKind::BatchNorm2d) {
      const int c = static_cast<int>(l.gamma.numel());
      const std::vector<int> keep = keep_list(c, drop_out);
      l.gamma = gather_rows(l.gamma, keep, 1);
      l.beta = gather_rows(l.beta, keep, 1);
      l.running_mean = gather_rows(l.running_mean, keep, 1);
      l.running_var = gather_rows(l.running_var, keep, 1);
    } else if (l.kind == LayerKind::Linear) {
      require(drop_out.empty(), ErrorCode::InvalidArgument,
              "linear output features are not prunable");
      const std::vector<int> keep = keep_list(l.in_features, drop_in);
      Tensor w({l.out_features, static_cast<int>(keep.size())});
      for (int r = 0; r < l.out_features; ++r) {
        const float* src = l.weight.data() + static_cast<std::size_t>(r) * l.in_features;
        float* dst = w.data() + static_cast<std::size_t>(r) * keep.size();
        for (std::size_t c = 0; c < keep.size(); ++c) dst[c] = src[keep[c]];
      }
      l.weight = std::move(w);
      l.in_features = static_cast<int>(keep.size());
    }
  }
  out.validate();
  return out;
}

CostReport cost_report(const NetworkGraph& net) {
  auto shapes = net.infer_shapes();
  CostReport rep;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& l = net.layers[li];
    const auto& os = shapes[li];
    LayerCost c;
    c.name = l.name;
    c.kind = layer_kind_name(l.kind);
    const std::int64_t out_elems =
        os.size() == 3 ? static_cast<std::int64_t>(os[0]) * os[1] * os[2] : os[0];
    switch (l.kind) {
      case LayerKind::Conv2d:
        c.flops = static_cast<std::int64_t>(l.out_channels) * l.in_channels *
                  l.kernel_h * l.kernel_w * os[1] * os[2];
        c.params = static_cast<std::int64_t>(l.out_channels) * l.in_channels *
                       l.kernel_h * l.kernel_w +
                   l.out_channels;
        break;
      case LayerKind::Linear:
        c.flops = static_cast<std::int64_t>(l.out_features) * l.in_features;
        c.params = static_cast<std::int64_t>(l.out_features) * l.in_features +
                   l.out_features;
        break;
      case LayerKind::BatchNorm2d:
        c.flops = out_elems;
        c.params = 2 * l.gamma.numel();
        c.buffers = 2 * l.gamma.numel();
        break;
      case LayerKind::Relu:
      case LayerKind::ResidualAdd:
        c.flops = out_elems;
        break;
      case LayerKind::MaxPool2d:
      case LayerKind::AvgPool2d:
        c.flops = out_elems * l.pool_h * l.pool_w;
        break;
      case LayerKind::Flatten:
        break;
    }
    rep.total_flops += c.flops;
    rep.total_params += c.params;
    rep.total_buffers += c.buffers;
    rep.layers.push_back(std::move(c));
  }
  return rep;
}

CompressionReport compression_report(const NetworkGraph& base,
                                     const NetworkGraph& pruned) {
  const CostReport b = cost_report(base);
  const CostReport p = cost_report(pruned);
  CompressionReport rep;
  rep.base_flops = b.total_flops;
  rep.pruned_flops = p.total_flops;
  rep.base_params = b.total_params;
  rep.pruned_params = p.total_params;
  require(p.total_flops > 0 && p.total_params > 0, ErrorCode::InvalidArgument,
          "pruned network has no cost");
  rep.flops_ratio = static_cast<double>(b.total_flops) / static_cast<double>(p.total_flops);
  rep.params_ratio =
      static_cast<double>(b.total_params) / static_cast<double>(p.total_params);
  rep.msp = 100.0 * (1.0 - static_cast<double>(p.total_params) /
                               static_cast<double>(b.total_params));
  rep.psp = 100.0 * (1.0 - static_cast<double>(p.total_flops) /
                               static_cast<double>(b.total_flops));
  return rep;
}

}  // namespace nexprune
