#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nexprune/network.hpp"

namespace nexprune {

// One parameter slice touched when a coupled channel group is removed.
// axis 0 = output channels / rows, axis 1 = input channels / columns.
struct SliceRef {
  int layer = -1;
  int axis = 0;
  int begin = 0;  // [begin, end) along the axis
  int end = 0;
};

// Channels that must be removed together for the network to stay
// shape-consistent. `anchors` are the (conv layer, out channel) pairs that
// own the group; residual connections can merge several anchors into one
// group. `slices` covers every parameter region the removal touches.
struct CouplingGroup {
  std::vector<std::pair<int, int>> anchors;  // (conv layer id, channel)
  std::vector<SliceRef> slices;
  bool protected_group = false;  // feeds the network output dimension
};

// Enumerate all coupling groups of the network. Order is deterministic:
// ascending by the smallest (layer, channel) anchor.
std::vector<CouplingGroup> coupling_groups(const NetworkGraph& net);

// Zero every parameter in the group's slices without changing any shape.
// Because removal only ever drops channels whose entire fan-in and fan-out
// were zeroed, the network function is preserved exactly.
void zero_group(NetworkGraph& net, const CouplingGroup& group);

// Rebuild the network with the given groups physically removed. Score maps
// and capture indices computed before the call no longer apply.
NetworkGraph apply_prune(const NetworkGraph& net,
                         const std::vector<CouplingGroup>& groups);

// Counting conventions: FLOPs are multiply-accumulate pairs per sample
// (conv and linear count weights only; norm, activation, pooling and
// residual layers count one operation per output element). Params count
// learnable tensors; norm running statistics are reported separately.
struct LayerCost {
  std::string name;
  std::string kind;
  std::int64_t flops = 0;
  std::int64_t params = 0;
  std::int64_t buffers = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::int64_t total_flops = 0;
  std::int64_t total_params = 0;
  std::int64_t total_buffers = 0;
};

CostReport cost_report(const NetworkGraph& net);

// Compression summary of `pruned` relative to `base`.
struct CompressionReport {
  std::int64_t base_flops = 0, pruned_flops = 0;
  std::int64_t base_params = 0, pruned_params = 0;
  double flops_ratio = 1.0;   // base / pruned
  double params_ratio = 1.0;  // base / pruned
  double msp = 0.0;           // params removed, percent
  double psp = 0.0;           // flops removed, percent
};

CompressionReport compression_report(const NetworkGraph& base,
                                     const NetworkGraph& pruned);

}  // namespace nexprune
