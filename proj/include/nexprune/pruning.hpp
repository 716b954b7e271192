#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nexprune/model_graph.hpp"
#include "nexprune/network.hpp"
#include "nexprune/sampling.hpp"
#include "nexprune/scoring.hpp"

namespace nexprune {

enum class PruneScope { Global, Local };
enum class PruneSchedule { Iterative, OneShot };
enum class RatioKind { Flops, Params };

const char* prune_scope_name(PruneScope s);
PruneScope prune_scope_from_name(const std::string& name);
const char* prune_schedule_name(PruneSchedule s);
PruneSchedule prune_schedule_from_name(const std::string& name);

struct PruneConfig {
  double target_ratio = 2.0;       // base cost / pruned cost to reach
  RatioKind ratio_kind = RatioKind::Flops;
  double kappa = 0.05;             // fraction of remaining groups per step
  int steps_max = 100;
  PruneScope scope = PruneScope::Global;
  PruneSchedule schedule = PruneSchedule::Iterative;
  int score_update_every = 1;      // steps between score refreshes
};

// Scores the current (already pruned) network. Called before the first
// step and on the refresh cadence.
using Scorer = std::function<ScoreMap(NetworkGraph&)>;
// Optional fine-tuning pass; invoked per step for the iterative schedule
// and once after the loop for one-shot.
using FineTuner = std::function<void(NetworkGraph&, int step)>;

struct PruneStepRecord {
  int step = 0;
  int groups_removed = 0;
  double flops_ratio = 1.0;
  double params_ratio = 1.0;
  double msp = 0.0;
  double psp = 0.0;
};

// One removed channel group, identified by its anchor channels.
struct RemovalRecord {
  int step = 0;
  std::vector<std::pair<int, int>> anchors;  // (conv layer id, channel)
  float score = 0.0f;
};

struct PruneResult {
  std::vector<PruneStepRecord> trajectory;
  std::vector<RemovalRecord> removals;  // in removal order
  CompressionReport final_report;
  int steps = 0;
  int guard_skips = 0;   // groups skipped to avoid emptying a layer
  bool shortfall = false;  // target unreachable within the constraints
};

// Iterative bottom-k structured pruning. Mutates `net` in place; the
// returned report compares against the network as passed in. Global scope
// ranks per-layer min-max rescaled scores so layers with uniformly low
// raw scores are not emptied first; recorded removal scores stay raw.
PruneResult run_pruning(NetworkGraph& net, const PruneConfig& cfg,
                        const Scorer& scorer, const FineTuner& fine_tune = nullptr);

// Standard scorer built from a criterion. Expressiveness criteria forward
// a scoring batch drawn by `sampling` from `data`; the hybrid criterion
// blends group importance with expressiveness at the given alpha. The
// dataset must outlive the returned closure.
Scorer make_scorer(Criterion criterion, const Dataset& data,
                   const SamplingConfig& sampling, const NexpConfig& nexp,
                   float alpha, std::uint64_t seed);

// Pruning-at-initialization ladder. Each exponent r prunes a fresh copy of
// the network one-shot to params ratio 10^r; the pruned copies come back
// ready for training. cfg supplies kappa, steps_max and scope; the target,
// ratio kind and schedule are overridden per run.
struct PaiRun {
  double exponent = 0.0;
  NetworkGraph net;
  PruneResult result;
};

std::vector<PaiRun> pai_sweep(const NetworkGraph& net_at_init,
                              const std::vector<double>& exponents,
                              const PruneConfig& cfg, const Scorer& scorer);

}  // namespace nexprune
