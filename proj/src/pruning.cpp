#include "nexprune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "nexprune/error.hpp"

namespace nexprune {

const char* prune_scope_name(PruneScope s) {
  return s == PruneScope::Global ? "global" : "local";
}

PruneScope prune_scope_from_name(const std::string& name) {
  if (name == "global") return PruneScope::Global;
  if (name == "local") return PruneScope::Local;
  fail(ErrorCode::InvalidArgument, "unknown prune scope: " + name);
}

const char* prune_schedule_name(PruneSchedule s) {
  return s == PruneSchedule::Iterative ? "iterative" : "one-shot";
}

PruneSchedule prune_schedule_from_name(const std::string& name) {
  if (name == "iterative") return PruneSchedule::Iterative;
  if (name == "one-shot") return PruneSchedule::OneShot;
  fail(ErrorCode::InvalidArgument, "unknown prune schedule: " + name);
}

namespace {

struct Candidate {
  float score = 0.0f;
  std::size_t group = 0;
  std::pair<int, int> key;  // smallest anchor, for stable tie-breaks
};

float group_score(const CouplingGroup& g, const ScoreMap& map) {
  // Merged groups take the mean of their anchors' scores.
  double sum = 0.0;
  for (const auto& [layer, ch] : g.anchors)
    sum += map.scores.at(layer)[static_cast<std::size_t>(ch)];
  return static_cast<float>(sum / static_cast<double>(g.anchors.size()));
}

// Raw score distributions are not comparable across layers (a layer whose
// filters correlate scores uniformly low and would be emptied first), so
// global ranking rescales each layer's scores to [0, 1] by the layer's own
// min and max. The rescale is monotone within a layer, so local selection
// is unaffected and uses the raw map, and it cancels any network-wide
// affine rescale, so blended maps rank like their raw sources. A constant
// layer maps to all zeros.
ScoreMap normalize_per_layer(const ScoreMap& map) {
  ScoreMap out;
  out.provenance = map.provenance;
  for (const auto& [layer, vals] : map.scores) {
    float lo = 0.0f, hi = 0.0f;
    if (!vals.empty()) {
      lo = *std::min_element(vals.begin(), vals.end());
      hi = *std::max_element(vals.begin(), vals.end());
    }
    const float span = hi - lo;
    std::vector<float> norm(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      norm[i] = span > 0.0f ? (vals[i] - lo) / span : 0.0f;
    out.scores[layer] = std::move(norm);
  }
  return out;
}

std::vector<Candidate> ranked_candidates(const std::vector<CouplingGroup>& groups,
                                         const ScoreMap& map) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].protected_group) continue;
    Candidate c;
    c.score = group_score(groups[i], map);
    c.group = i;
    c.key = groups[i].anchors.front();
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.key < b.key;
  });
  return out;
}

// Greedy bottom-up pick honoring the layer-collapse guard: a group is
// skipped when taking it would leave some conv without output channels.
std::vector<std::size_t> pick_guarded(const std::vector<Candidate>& ranked,
                                      const std::vector<CouplingGroup>& groups,
                                      const NetworkGraph& net, int want,
                                      std::map<int, int>& remaining,
                                      int& guard_skips) {
  std::vector<std::size_t> picked;
  for (const Candidate& c : ranked) {
    if (static_cast<int>(picked.size()) >= want) break;
    const CouplingGroup& g = groups[c.group];
    std::map<int, int> loss;
    for (const auto& [layer, ch] : g.anchors) ++loss[layer];
    bool ok = true;
    for (const auto& [layer, n] : loss)
      if (remaining.at(layer) - n <= 0) {
        ok = false;
        break;
      }
    if (!ok) {
      ++guard_skips;
      continue;
    }
    for (const auto& [layer, n] : loss) remaining[layer] -= n;
    picked.push_back(c.group);
  }
  (void)net;
  return picked;
}

// Drop the removed channels' entries so a stale map still lines up with
// the physically pruned network.
ScoreMap compact_map(const ScoreMap& map, const NetworkGraph& net,
                     const std::vector<CouplingGroup>& groups,
                     const std::vector<std::size_t>& picked) {
  std::map<int, std::set<int>> removed;
  for (std::size_t gi : picked)
    for (const auto& [layer, ch] : groups[gi].anchors) removed[layer].insert(ch);
  ScoreMap out;
  out.provenance = map.provenance;
  for (const auto& [layer, vals] : map.scores) {
    const auto it = removed.find(layer);
    if (it == removed.end()) {
      out.scores[layer] = vals;
      continue;
    }
    std::vector<float> kept;
    kept.reserve(vals.size() - it->second.size());
    for (std::size_t ch = 0; ch < vals.size(); ++ch)
      if (!it->second.count(static_cast<int>(ch))) kept.push_back(vals[ch]);
    out.scores[layer] = std::move(kept);
  }
  (void)net;
  return out;
}

}  // namespace

PruneResult run_pruning(NetworkGraph& net, const PruneConfig& cfg,
                        const Scorer& scorer, const FineTuner& fine_tune) {
  require(cfg.target_ratio >= 1.0, ErrorCode::InvalidArgument,
          "target ratio must be at least 1");
  require(cfg.kappa > 0.0 && cfg.kappa <= 1.0, ErrorCode::InvalidArgument,
          "kappa must lie in (0, 1]");
  require(cfg.steps_max >= 1, ErrorCode::InvalidArgument, "steps_max must be positive");
  require(cfg.score_update_every >= 1, ErrorCode::InvalidArgument,
          "score update cadence must be positive");
  require(scorer != nullptr, ErrorCode::InvalidArgument, "scorer is required");
  net.validate();

  const NetworkGraph base = net;
  PruneResult res;
  ScoreMap map = scorer(net);

  double ratio = 1.0;
  while (ratio < cfg.target_ratio && res.steps < cfg.steps_max) {
    const int step = res.steps + 1;
    const std::vector<CouplingGroup> groups = coupling_groups(net);
    const ScoreMap rank_map =
        cfg.scope == PruneScope::Global ? normalize_per_layer(map) : map;
    const std::vector<Candidate> ranked = ranked_candidates(groups, rank_map);
    if (ranked.empty()) {
      res.shortfall = true;
      break;
    }

    std::map<int, int> remaining;
    for (int conv : net.conv_layers())
      remaining[conv] = net.layers[static_cast<std::size_t>(conv)].out_channels;

    std::vector<std::size_t> picked;
    if (cfg.scope == PruneScope::Global) {
      const int want = std::max(
          1, static_cast<int>(std::lround(cfg.kappa * static_cast<double>(ranked.size()))));
      picked = pick_guarded(ranked, groups, net, want, remaining, res.guard_skips);
    } else {
      // Local scope: an even fraction per layer; a group belongs to the
      // layer of its smallest anchor.
      std::map<int, std::vector<Candidate>> per_layer;
      for (const Candidate& c : ranked) per_layer[c.key.first].push_back(c);
      for (const auto& [layer, cands] : per_layer) {
        const int want = std::max(
            1, static_cast<int>(std::lround(cfg.kappa * static_cast<double>(cands.size()))));
        std::vector<std::size_t> got =
            pick_guarded(cands, groups, net, want, remaining, res.guard_skips);
        picked.insert(picked.end(), got.begin(), got.end());
      }
    }
    if (picked.empty()) {
      res.shortfall = true;
      break;
    }

    for (std::size_t gi : picked) {
      RemovalRecord rec;
      rec.step = step;
      rec.anchors = groups[gi].anchors;
      rec.score = group_score(groups[gi], map);
      res.removals.push_back(std::move(rec));
      // Zero first so physical removal cannot change the function.
      zero_group(net, groups[gi]);
    }

    std::vector<CouplingGroup> selected;
    selected.reserve(picked.size());
    for (std::size_t gi : picked) selected.push_back(groups[gi]);
    NetworkGraph pruned = apply_prune(net, selected);
    map = compact_map(map, pruned, groups, picked);
    net = std::move(pruned);

    res.steps = step;
    const CompressionReport rep = compression_report(base, net);
    ratio = cfg.ratio_kind == RatioKind::Flops ? rep.flops_ratio : rep.params_ratio;

    PruneStepRecord sr;
    sr.step = step;
    sr.groups_removed = static_cast<int>(picked.size());
    sr.flops_ratio = rep.flops_ratio;
    sr.params_ratio = rep.params_ratio;
    sr.msp = rep.msp;
    sr.psp = rep.psp;
    res.trajectory.push_back(sr);

    if (cfg.schedule == PruneSchedule::Iterative && fine_tune) fine_tune(net, step);
    if (ratio < cfg.target_ratio && res.steps < cfg.steps_max &&
        step % cfg.score_update_every == 0)
      map = scorer(net);
  }

  if (cfg.schedule == PruneSchedule::OneShot && fine_tune) fine_tune(net, res.steps);
  res.final_report = compression_report(base, net);
  if (ratio < cfg.target_ratio) res.shortfall = true;
  return res;
}

std::vector<PaiRun> pai_sweep(const NetworkGraph& net_at_init,
                              const std::vector<double>& exponents,
                              const PruneConfig& cfg, const Scorer& scorer) {
  std::vector<PaiRun> out;
  out.reserve(exponents.size());
  for (double r : exponents) {
    require(r >= 0.0, ErrorCode::InvalidArgument,
            "compression exponent must be non-negative");
    PaiRun run;
    run.exponent = r;
    run.net = net_at_init;
    PruneConfig pc = cfg;
    pc.target_ratio = std::pow(10.0, r);
    pc.ratio_kind = RatioKind::Params;
    pc.schedule = PruneSchedule::OneShot;
    run.result = run_pruning(run.net, pc, scorer);
    out.push_back(std::move(run));
  }
  return out;
}

Scorer make_scorer(Criterion criterion, const Dataset& data,
                   const SamplingConfig& sampling, const NexpConfig& nexp,
                   float alpha, std::uint64_t seed) {
  switch (criterion) {
    case Criterion::Nexp: {
      // The scoring batch is drawn once and reused across refreshes.
      Tensor batch = sample_batch(data, sampling);
      return [batch, nexp](NetworkGraph& net) {
        return nexp_score_map(net, batch, nexp);
      };
    }
    case Criterion::GroupL1:
      return [](NetworkGraph& net) { return group_l1_score_map(net); };
    case Criterion::Hybrid: {
      Tensor batch = sample_batch(data, sampling);
      return [batch, nexp, alpha](NetworkGraph& net) {
        return hybrid_score_map(group_l1_score_map(net),
                                nexp_score_map(net, batch, nexp), alpha);
      };
    }
    case Criterion::Random:
      return [seed](NetworkGraph& net) { return random_score_map(net, seed); };
  }
  fail(ErrorCode::InvalidArgument, "unknown criterion");
}

}  // namespace nexprune
