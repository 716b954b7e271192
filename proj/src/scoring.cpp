#include "nexprune/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nexprune/error.hpp"
#include "nexprune/model_graph.hpp"
#include "nexprune/rng.hpp"

namespace nexprune {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Nexp: return "nexp";
    case Criterion::GroupL1: return "l1";
    case Criterion::Hybrid: return "hybrid";
    case Criterion::Random: return "random";
  }
  return "unknown";
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "nexp") return Criterion::Nexp;
  if (name == "l1") return Criterion::GroupL1;
  if (name == "hybrid") return Criterion::Hybrid;
  if (name == "random") return Criterion::Random;
  fail(ErrorCode::InvalidArgument, "unknown criterion: " + name);
}

const char* aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Min: return "min";
    case Aggregation::Max: return "max";
    case Aggregation::Median: return "median";
  }
  return "unknown";
}

Aggregation aggregation_from_name(const std::string& name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "min") return Aggregation::Min;
  if (name == "max") return Aggregation::Max;
  if (name == "median") return Aggregation::Median;
  fail(ErrorCode::InvalidArgument, "unknown aggregation: " + name);
}

std::vector<float> ScoreMap::flat() const {
  std::vector<float> out;
  for (const auto& [layer, vals] : scores)
    out.insert(out.end(), vals.begin(), vals.end());
  return out;
}

bool ScoreMap::same_structure(const ScoreMap& other) const {
  if (scores.size() != other.scores.size()) return false;
  auto it = other.scores.begin();
  for (const auto& [layer, vals] : scores) {
    if (it->first != layer || it->second.size() != vals.size()) return false;
    ++it;
  }
  return true;
}

namespace {

double aggregate(std::vector<double>& vals, Aggregation agg) {
  if (vals.empty()) return 0.0;
  switch (agg) {
    case Aggregation::Mean: {
      double sum = 0.0;
      for (double v : vals) sum += v;
      return sum / static_cast<double>(vals.size());
    }
    case Aggregation::Min:
      return *std::min_element(vals.begin(), vals.end());
    case Aggregation::Max:
      return *std::max_element(vals.begin(), vals.end());
    case Aggregation::Median: {
      std::sort(vals.begin(), vals.end());
      const std::size_t n = vals.size();
      if (n % 2 == 1) return vals[n / 2];
      return 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
  }
  return 0.0;
}

}  // namespace

double nexp_set_score(const PatternSet& set, Aggregation agg) {
  const int n = set.num_filters;
  if (n < 2) return 0.0;
  if (agg == Aggregation::Mean) {
    // Pair order is (i ascending, j ascending); the denominator is the
    // exact pair count. Tests pin this summation order.
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) sum += normalized_hamming(set, i, j);
    return sum / (static_cast<double>(n) * (n - 1) / 2.0);
  }
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) vals.push_back(normalized_hamming(set, i, j));
  return aggregate(vals, agg);
}

std::vector<float> nexp_filter_scores(const PatternSet& set, Aggregation agg) {
  const int n = set.num_filters;
  std::vector<float> out(static_cast<std::size_t>(n), 0.0f);
  if (n < 2) return out;
  for (int k = 0; k < n; ++k) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n) - 1);
    for (int j = 0; j < n; ++j)
      if (j != k) vals.push_back(normalized_hamming(set, k, j));
    out[static_cast<std::size_t>(k)] = static_cast<float>(aggregate(vals, agg));
  }
  return out;
}

ScoreMap nexp_score_map(NetworkGraph& net, const Tensor& batch,
                        const NexpConfig& cfg) {
  require(cfg.pre_binarize_scale > 0.0f, ErrorCode::InvalidArgument,
          "pre-binarize scale must be positive");
  ActivationStore store;
  forward(net, batch, RunMode::Eval, nullptr, &store, nullptr);

  ScoreMap map;
  map.provenance = std::string("nexp/") + aggregation_name(cfg.aggregation);
  for (int conv : net.conv_layers()) {
    Tensor captured = store.for_conv(conv);
    if (cfg.pre_binarize_scale != 1.0f) {
      float* p = captured.data();
      for (std::int64_t i = 0; i < captured.numel(); ++i)
        p[i] *= cfg.pre_binarize_scale;
    }
    PatternSet set = binarize_activations(captured);
    map.scores[conv] = nexp_filter_scores(set, cfg.aggregation);
  }
  return map;
}

ScoreMap group_l1_score_map(const NetworkGraph& net) {
  auto groups = coupling_groups(net);
  ScoreMap map;
  map.provenance = "l1";
  for (int conv : net.conv_layers())
    map.scores[conv].assign(
        static_cast<std::size_t>(net.layers[static_cast<std::size_t>(conv)].out_channels),
        0.0f);

  for (const CouplingGroup& g : groups) {
    double total = 0.0;
    for (const SliceRef& s : g.slices) {
      const LayerSpec& l = net.layers[static_cast<std::size_t>(s.layer)];
      auto add_abs_rows = [&](const Tensor& t, std::int64_t row_size) {
        for (int r = s.begin; r < s.end; ++r) {
          const float* p = t.data() + static_cast<std::size_t>(r) * row_size;
          for (std::int64_t i = 0; i < row_size; ++i) total += std::abs(p[i]);
        }
      };
      if (s.axis == 0) {
        if (l.kind == LayerKind::Conv2d) {
          add_abs_rows(l.weight,
                       static_cast<std::int64_t>(l.in_channels) * l.kernel_h * l.kernel_w);
          for (int r = s.begin; r < s.end; ++r) total += std::abs(l.bias[r]);
        } else if (l.kind == LayerKind::BatchNorm2d) {
          for (int r = s.begin; r < s.end; ++r)
            total += std::abs(l.gamma[r]) + std::abs(l.beta[r]);
        } else if (l.kind == LayerKind::Linear) {
          add_abs_rows(l.weight, l.in_features);
          for (int r = s.begin; r < s.end; ++r) total += std::abs(l.bias[r]);
        }
      } else {
        // Input-axis slice: columns of the consumer's weight.
        if (l.kind == LayerKind::Conv2d) {
          const std::int64_t k2 = static_cast<std::int64_t>(l.kernel_h) * l.kernel_w;
          for (int oc = 0; oc < l.out_channels; ++oc)
            for (int icn = s.begin; icn < s.end; ++icn) {
              const float* p = l.weight.data() +
                               (static_cast<std::size_t>(oc) * l.in_channels + icn) * k2;
              for (std::int64_t i = 0; i < k2; ++i) total += std::abs(p[i]);
            }
        } else if (l.kind == LayerKind::Linear) {
          for (int r = 0; r < l.out_features; ++r) {
            const float* p = l.weight.data() + static_cast<std::size_t>(r) * l.in_features;
            for (int c = s.begin; c < s.end; ++c) total += std::abs(p[c]);
          }
        }
      }
    }
    for (const auto& [layer, channel] : g.anchors)
      map.scores[layer][static_cast<std::size_t>(channel)] = static_cast<float>(total);
  }
  return map;
}

ScoreMap hybrid_score_map(const ScoreMap& importance, const ScoreMap& expressiveness,
                          float alpha) {
  require(alpha >= 0.0f && alpha <= 1.0f, ErrorCode::InvalidArgument,
          "alpha must lie in [0,1]");
  require(importance.same_structure(expressiveness), ErrorCode::KeyMismatch,
          "hybrid inputs cover different conv structures");

  // Min-max normalization over the whole network; a constant map maps to
  // all zeros.
  auto normalize = [](const ScoreMap& m) {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -std::numeric_limits<float>::infinity();
    for (const auto& [layer, vals] : m.scores)
      for (float v : vals) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    ScoreMap out = m;
    const float span = hi - lo;
    for (auto& [layer, vals] : out.scores)
      for (float& v : vals) v = span > 0.0f ? (v - lo) / span : 0.0f;
    return out;
  };

  ScoreMap imp = normalize(importance);
  ScoreMap expr = normalize(expressiveness);
  ScoreMap out;
  out.provenance = "hybrid/alpha=" + std::to_string(alpha);
  for (const auto& [layer, vals] : imp.scores) {
    const auto& evals = expr.scores.at(layer);
    std::vector<float> combined(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      combined[i] = (1.0f - alpha) * vals[i] + alpha * evals[i];
    out.scores[layer] = std::move(combined);
  }
  return out;
}

ScoreMap random_score_map(const NetworkGraph& net, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ScoreMap map;
  map.provenance = "random/seed=" + std::to_string(seed);
  for (int conv : net.conv_layers()) {
    const int n = net.layers[static_cast<std::size_t>(conv)].out_channels;
    std::vector<float> vals(static_cast<std::size_t>(n));
    for (float& v : vals) v = uniform_float(rng, 0.0f, 1.0f);
    map.scores[conv] = std::move(vals);
  }
  return map;
}

}  // namespace nexprune
