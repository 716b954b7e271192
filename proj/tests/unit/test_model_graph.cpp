#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nexprune/architectures.hpp"
#include "nexprune/error.hpp"
#include "nexprune/model_graph.hpp"
#include "../support/build_nets.hpp"

using namespace nexprune;

TEST_SUITE("model_graph") {

TEST_CASE("groups partition all conv channels") {
  Rng rng = make_rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkGraph net = testnet::random_network(rng, rng());
    auto groups = coupling_groups(net);
    std::set<std::pair<int, int>> seen;
    for (const auto& g : groups)
      for (const auto& a : g.anchors) {
        CHECK(seen.insert(a).second);  // no anchor in two groups
      }
    std::size_t expected = 0;
    for (int conv : net.conv_layers())
      expected += static_cast<std::size_t>(
          net.layers[static_cast<std::size_t>(conv)].out_channels);
    CHECK(seen.size() == expected);
  }
}

TEST_CASE("residual adds merge producers across chained blocks") {
  NetworkGraph net = build_resnet_small(10, 1);
  auto groups = coupling_groups(net);
  const int stem = net.layer_index("stem.conv");
  const int a2 = net.layer_index("a.conv2");
  const int b2 = net.layer_index("b.conv2");
  const int bs = net.layer_index("b.sconv");
  const int c2 = net.layer_index("c.conv2");

  auto group_of = [&](int layer, int ch) -> const CouplingGroup& {
    for (const auto& g : groups)
      for (const auto& [l, c] : g.anchors)
        if (l == layer && c == ch) return g;
    FAIL("no group found");
    return groups[0];
  };

  // Identity block: stem output and the block's second conv prune together.
  for (int ch : {0, 7, 15}) {
    const CouplingGroup& g = group_of(stem, ch);
    std::set<std::pair<int, int>> anchors(g.anchors.begin(), g.anchors.end());
    CHECK(anchors.count({stem, ch}) == 1);
    CHECK(anchors.count({a2, ch}) == 1);
    CHECK(anchors.size() == 2);
  }
  // Projection block chained into an identity block: three-way merge.
  for (int ch : {0, 13, 31}) {
    const CouplingGroup& g = group_of(b2, ch);
    std::set<std::pair<int, int>> anchors(g.anchors.begin(), g.anchors.end());
    CHECK(anchors.count({b2, ch}) == 1);
    CHECK(anchors.count({bs, ch}) == 1);
    CHECK(anchors.count({c2, ch}) == 1);
    CHECK(anchors.size() == 3);
  }
}

TEST_CASE("group slices cover filter, norm channel and consumer fan-in") {
  NetworkGraph net = build_resnet_small(10, 1);
  auto groups = coupling_groups(net);
  const int stem = net.layer_index("stem.conv");
  const CouplingGroup* g = nullptr;
  for (const auto& cand : groups)
    for (const auto& [l, c] : cand.anchors)
      if (l == stem && c == 3) g = &cand;
  REQUIRE(g != nullptr);

  auto has_slice = [&](const std::string& name, int axis, int begin) {
    const int id = net.layer_index(name);
    return std::any_of(g->slices.begin(), g->slices.end(), [&](const SliceRef& s) {
      return s.layer == id && s.axis == axis && s.begin == begin;
    });
  };
  CHECK(has_slice("stem.conv", 0, 3));
  CHECK(has_slice("stem.bn", 0, 3));
  CHECK(has_slice("a.conv1", 1, 3));   // consumer input slice
  CHECK(has_slice("a.conv2", 0, 3));   // merged anchor
  CHECK(has_slice("a.bn2", 0, 3));
  CHECK(has_slice("b.conv1", 1, 3));   // consumers after the residual join
  CHECK(has_slice("b.sconv", 1, 3));
}

TEST_CASE("flatten expands a channel into a linear column range") {
  NetworkGraph net = build_cnn_small(10, 1);
  auto groups = coupling_groups(net);
  const int conv3 = net.layer_index("conv3");
  const int head = net.layer_index("head");
  // conv3 output is 64 channels at 2x2 after the last pool.
  for (const auto& g : groups) {
    for (const auto& [l, ch] : g.anchors) {
      if (l != conv3) continue;
      bool found = false;
      for (const SliceRef& s : g.slices)
        if (s.layer == head && s.axis == 1) {
          CHECK(s.begin == ch * 4);
          CHECK(s.end == (ch + 1) * 4);
          found = true;
        }
      CHECK(found);
    }
  }
}

TEST_CASE("linear-headed networks have no protected groups") {
  for (const std::string& preset : preset_names()) {
    NetworkGraph net = build_preset(preset, 10, 1);
    for (const auto& g : coupling_groups(net)) CHECK_FALSE(g.protected_group);
  }
}

TEST_CASE("convs feeding the output directly are protected") {
  NetworkGraph net;
  net.input_shape = {3, 6, 6};
  int x = testnet::conv(net, "c1", -1, 3, 4, 3, 1, 1);
  x = testnet::relu(net, "r1", x);
  x = testnet::conv(net, "c2", x, 4, 5, 3, 1, 1);
  testnet::relu(net, "r2", x);
  init_parameters(net, 0);
  net.validate();

  const int c1 = net.layer_index("c1");
  const int c2 = net.layer_index("c2");
  int protected_count = 0;
  for (const auto& g : coupling_groups(net)) {
    for (const auto& [l, ch] : g.anchors) {
      if (l == c2) CHECK(g.protected_group);
      if (l == c1) CHECK_FALSE(g.protected_group);
    }
    if (g.protected_group) ++protected_count;
  }
  CHECK(protected_count == 5);

  // Removing a protected group is refused.
  for (const auto& g : coupling_groups(net))
    if (g.protected_group) {
      CHECK_THROWS_AS(apply_prune(net, {g}), Error);
      break;
    }
}

TEST_CASE("zeroed groups make physical removal float-exact") {
  Rng rng = make_rng(52);
  int tested = 0;
  for (int trial = 0; trial < 8; ++trial) {
    NetworkGraph net = testnet::random_network(rng, rng());
    auto groups = coupling_groups(net);
    std::vector<std::size_t> removable;
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (!groups[i].protected_group) removable.push_back(i);
    if (removable.empty()) continue;
    const std::size_t pick =
        removable[rng() % removable.size()];

    zero_group(net, groups[pick]);
    NetworkGraph pruned = apply_prune(net, {groups[pick]});

    for (int b = 0; b < 3; ++b) {
      Tensor batch = testnet::random_batch(rng, net, 2);
      Tensor before = forward(net, batch, RunMode::Eval);
      Tensor after = forward(pruned, batch, RunMode::Eval);
      REQUIRE(before.same_shape(after));
      float worst = 0.0f;
      for (std::int64_t i = 0; i < before.numel(); ++i)
        worst = std::max(worst, std::abs(before[i] - after[i]));
      CHECK(worst < 1e-5f);
    }
    ++tested;
  }
  CHECK(tested >= 5);
}

TEST_CASE("apply_prune refuses to empty a layer") {
  NetworkGraph net = build_cnn_small(10, 1);
  auto groups = coupling_groups(net);
  const int conv1 = net.layer_index("conv1");
  std::vector<CouplingGroup> all_of_conv1;
  for (const auto& g : groups)
    for (const auto& [l, ch] : g.anchors)
      if (l == conv1) all_of_conv1.push_back(g);
  REQUIRE(all_of_conv1.size() == 16);
  CHECK_THROWS_AS(apply_prune(net, all_of_conv1), Error);
}

TEST_CASE("cost report matches the hand tally for cnn-small") {
  NetworkGraph net = build_cnn_small(10, 1);
  const CostReport rep = cost_report(net);
  CHECK(rep.total_params == 26154);
  CHECK(rep.total_flops == 717312);
  CHECK(rep.total_buffers == 0);
}

TEST_CASE("cost report matches the hand tally for vgg-small") {
  NetworkGraph net = build_vgg_small(10, 1);
  const CostReport rep = cost_report(net);
  CHECK(rep.total_params == 208618);
  CHECK(rep.total_flops == 8404224);
  CHECK(rep.total_buffers == 768);
}

TEST_CASE("cost report matches the hand tally for resnet-small") {
  NetworkGraph net = build_resnet_small(10, 1);
  const CostReport rep = cost_report(net);
  CHECK(rep.total_params == 97002);
  CHECK(rep.total_flops == 470016);
  CHECK(rep.total_buffers == 800);
}

TEST_CASE("compression report ratios are consistent") {
  NetworkGraph net = build_cnn_small(10, 2);
  auto groups = coupling_groups(net);
  std::vector<CouplingGroup> some;
  for (const auto& g : groups)
    if (!g.protected_group && some.size() < 10) some.push_back(g);
  NetworkGraph pruned = apply_prune(net, some);
  const CompressionReport rep = compression_report(net, pruned);
  CHECK(rep.flops_ratio > 1.0);
  CHECK(rep.params_ratio > 1.0);
  CHECK(rep.msp > 0.0);
  CHECK(rep.psp > 0.0);
  CHECK(rep.msp == doctest::Approx(100.0 * (1.0 - 1.0 / rep.params_ratio)));
  CHECK(rep.psp == doctest::Approx(100.0 * (1.0 - 1.0 / rep.flops_ratio)));
}

}  // TEST_SUITE
