#include <doctest.h>

#include <algorithm>

#include "nexprune/architectures.hpp"
#include "nexprune/error.hpp"
#include "nexprune/scoring.hpp"
#include "../support/build_nets.hpp"
#include "../support/oracles.hpp"

using namespace nexprune;

namespace {

PatternSet random_patterns(Rng& rng, int filters, int bits) {
  Tensor act({1, filters, 1, bits});
  for (std::int64_t i = 0; i < act.numel(); ++i)
    act[i] = uniform_float(rng, -1.0f, 1.0f);
  return binarize_activations(act);
}

std::vector<std::vector<bool>> unpack_all(const PatternSet& set) {
  std::vector<std::vector<bool>> out;
  for (int f = 0; f < set.num_filters; ++f)
    out.push_back(oracle::unpack_filter(set, f));
  return out;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("set score is bit-identical to the full-matrix oracle") {
  Rng rng = make_rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> fdist(2, 8), bdist(1, 64);
    PatternSet set = random_patterns(rng, fdist(rng), bdist(rng));
    const double fast = nexp_set_score(set, Aggregation::Mean);
    const double slow = oracle::full_matrix_nexp(unpack_all(set));
    REQUIRE(fast == slow);  // exact: same order, same denominators
  }
}

TEST_CASE("set score ranges and degenerate sets") {
  Rng rng = make_rng(42);
  PatternSet one = random_patterns(rng, 1, 16);
  CHECK(nexp_set_score(one, Aggregation::Mean) == 0.0);

  // Identical filters score 0; complementary filters score 1.
  Tensor same({1, 3, 1, 8});
  for (int f = 0; f < 3; ++f)
    for (int b = 0; b < 8; ++b) same.at4(0, f, 0, b) = (b % 2) ? 1.0f : -1.0f;
  CHECK(nexp_set_score(binarize_activations(same), Aggregation::Mean) == 0.0);

  Tensor comp({1, 2, 1, 8});
  for (int b = 0; b < 8; ++b) {
    comp.at4(0, 0, 0, b) = 1.0f;
    comp.at4(0, 1, 0, b) = -1.0f;
  }
  CHECK(nexp_set_score(binarize_activations(comp), Aggregation::Mean) == 1.0);
}

TEST_CASE("aggregations order correctly") {
  Rng rng = make_rng(43);
  PatternSet set = random_patterns(rng, 6, 32);
  const double mn = nexp_set_score(set, Aggregation::Min);
  const double md = nexp_set_score(set, Aggregation::Median);
  const double mean = nexp_set_score(set, Aggregation::Mean);
  const double mx = nexp_set_score(set, Aggregation::Max);
  CHECK(mn <= md);
  CHECK(md <= mx);
  CHECK(mn <= mean);
  CHECK(mean <= mx);
}

TEST_CASE("filter scores are permutation equivariant") {
  Rng rng = make_rng(44);
  Tensor act({2, 5, 3, 3});
  for (std::int64_t i = 0; i < act.numel(); ++i)
    act[i] = uniform_float(rng, -1.0f, 1.0f);
  const std::vector<float> base =
      nexp_filter_scores(binarize_activations(act), Aggregation::Mean);

  const std::vector<int> perm = {3, 0, 4, 1, 2};
  Tensor shuffled(act.shape());
  for (int n = 0; n < 2; ++n)
    for (int f = 0; f < 5; ++f)
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
          shuffled.at4(n, f, y, x) = act.at4(n, perm[static_cast<std::size_t>(f)], y, x);
  const std::vector<float> moved =
      nexp_filter_scores(binarize_activations(shuffled), Aggregation::Mean);
  for (int f = 0; f < 5; ++f)
    CHECK(moved[static_cast<std::size_t>(f)] == base[static_cast<std::size_t>(perm[static_cast<std::size_t>(f)])]);
}

TEST_CASE("positive prescaling leaves the score map bitwise unchanged") {
  Rng rng = make_rng(45);
  NetworkGraph net = build_cnn_small(10, 7);
  Tensor batch({4, 3, 16, 16});
  for (std::int64_t i = 0; i < batch.numel(); ++i)
    batch[i] = uniform_float(rng, -1.0f, 1.0f);

  NexpConfig base_cfg;
  const ScoreMap base = nexp_score_map(net, batch, base_cfg);
  for (float scale : {1e-4f, 0.5f, 3.0f, 1e4f}) {
    NexpConfig cfg;
    cfg.pre_binarize_scale = scale;
    const ScoreMap scaled = nexp_score_map(net, batch, cfg);
    REQUIRE(scaled.same_structure(base));
    for (const auto& [layer, vals] : base.scores) {
      const auto& svals = scaled.scores.at(layer);
      for (std::size_t i = 0; i < vals.size(); ++i) REQUIRE(vals[i] == svals[i]);
    }
  }
  NexpConfig bad;
  bad.pre_binarize_scale = -1.0f;
  CHECK_THROWS_AS(nexp_score_map(net, batch, bad), Error);
}

TEST_CASE("group l1 worked examples") {
  // Single conv into the head: score in 2x1x1 kernels with known weights.
  NetworkGraph net;
  net.input_shape = {2, 1, 1};
  int x = testnet::conv(net, "c", -1, 2, 2, 1, 1, 0);
  x = testnet::flatten(net, "f", x);
  testnet::linear(net, "head", x, 2, 2);
  init_parameters(net, 0);
  LayerSpec& c = net.layers[0];
  // filter 0: weights {1, -2}, bias 0; filter 1: all zero.
  c.weight[0] = 1.0f;
  c.weight[1] = -2.0f;
  c.weight[2] = 0.0f;
  c.weight[3] = 0.0f;
  c.bias.fill(0.0f);
  LayerSpec& head = net.layers[2];
  // head consumes flat features [f0, f1]; columns belong to the groups.
  head.weight = Tensor({2, 2}, {3.0f, 0.0f, 0.0f, 0.0f});
  head.bias.fill(0.0f);

  const ScoreMap map = group_l1_score_map(net);
  const auto& scores = map.scores.at(0);
  CHECK(scores[0] == doctest::Approx(1.0 + 2.0 + 3.0));  // |1|+|-2|+|3|
  CHECK(scores[1] == 0.0f);  // an all-zero group scores exactly zero
}

TEST_CASE("hybrid endpoints preserve the source rankings") {
  Rng rng = make_rng(46);
  NetworkGraph net = testnet::random_network(rng, 5);
  ScoreMap imp = random_score_map(net, 1);
  ScoreMap expr = random_score_map(net, 2);

  const ScoreMap at0 = hybrid_score_map(imp, expr, 0.0f);
  const ScoreMap at1 = hybrid_score_map(imp, expr, 1.0f);

  auto ranking = [](const ScoreMap& m) {
    std::vector<std::pair<float, std::pair<int, int>>> keys;
    for (const auto& [layer, vals] : m.scores)
      for (std::size_t i = 0; i < vals.size(); ++i)
        keys.push_back({vals[i], {layer, static_cast<int>(i)}});
    std::sort(keys.begin(), keys.end());
    std::vector<std::pair<int, int>> order;
    for (const auto& [v, id] : keys) order.push_back(id);
    return order;
  };
  CHECK(ranking(at0) == ranking(imp));
  CHECK(ranking(at1) == ranking(expr));

  CHECK_THROWS_AS(hybrid_score_map(imp, expr, 1.5f), Error);
}

TEST_CASE("hybrid normalization maps constants to zero") {
  Rng rng = make_rng(47);
  NetworkGraph net = testnet::random_network(rng, 6);
  ScoreMap flat_map;
  for (int conv : net.conv_layers())
    flat_map.scores[conv].assign(
        static_cast<std::size_t>(net.layers[static_cast<std::size_t>(conv)].out_channels),
        2.5f);
  ScoreMap expr = random_score_map(net, 3);
  const ScoreMap mixed = hybrid_score_map(flat_map, expr, 0.0f);
  for (const auto& [layer, vals] : mixed.scores)
    for (float v : vals) CHECK(v == 0.0f);
}

TEST_CASE("hybrid values stay inside [0,1]") {
  Rng rng = make_rng(48);
  NetworkGraph net = testnet::random_network(rng, 7);
  ScoreMap imp = random_score_map(net, 4);
  ScoreMap expr = random_score_map(net, 5);
  for (float alpha : {0.0f, 0.3f, 0.7f, 1.0f}) {
    const ScoreMap h = hybrid_score_map(imp, expr, alpha);
    for (const auto& [layer, vals] : h.scores)
      for (float v : vals) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
  }
}

}  // TEST_SUITE
