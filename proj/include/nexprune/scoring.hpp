#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nexprune/dataset.hpp"
#include "nexprune/network.hpp"
#include "nexprune/patterns.hpp"

namespace nexprune {

enum class Criterion { Nexp, GroupL1, Hybrid, Random };
enum class Aggregation { Mean, Min, Max, Median };

const char* criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);
const char* aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

// Per-filter importance scores for every conv layer, keyed by layer index.
// Scores are stored as float32 so CSV round-trips are exact.
struct ScoreMap {
  std::map<int, std::vector<float>> scores;  // conv layer id -> per-filter
  std::string provenance;                    // config summary, recorded in files

  std::vector<float> flat() const;  // (layer, filter) ascending
  bool same_structure(const ScoreMap& other) const;
};

// Expressiveness of one filter set: mean (or other aggregate) of the
// pairwise length-normalized Hamming distances over all unordered pairs.
// A set with fewer than two filters scores 0 for every filter.
double nexp_set_score(const PatternSet& set, Aggregation agg);

// Per-filter expressiveness: aggregate of the filter's distances to every
// other filter in the same layer.
std::vector<float> nexp_filter_scores(const PatternSet& set, Aggregation agg);

struct NexpConfig {
  Aggregation aggregation = Aggregation::Mean;
  float pre_binarize_scale = 1.0f;  // positive rescale applied before sign test
};

// Run the batch through the network in eval mode, capture post-activation
// maps for every conv layer, binarize, and score.
ScoreMap nexp_score_map(NetworkGraph& net, const Tensor& batch,
                        const NexpConfig& cfg = {});

// Group L1 importance: sum of |w| over every parameter slice that belongs
// to the filter's coupling group (conv filter, its norm channel, and the
// matching input slices of downstream consumers).
ScoreMap group_l1_score_map(const NetworkGraph& net);

// Hybrid score: per-map min-max normalization over the whole network, then
// (1 - alpha) * importance + alpha * expressiveness.
ScoreMap hybrid_score_map(const ScoreMap& importance, const ScoreMap& expressiveness,
                          float alpha);

// Uniform random scores in [0,1), for control experiments.
ScoreMap random_score_map(const NetworkGraph& net, std::uint64_t seed);

}  // namespace nexprune
