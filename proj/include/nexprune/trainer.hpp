#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nexprune/dataset.hpp"
#include "nexprune/network.hpp"

namespace nexprune {

// Plain SGD with step decay: lr is divided by `decay_factor` at each epoch
// listed in `decay_epochs`.
struct TrainConfig {
  int epochs = 20;
  int batch_size = 128;
  float lr = 0.1f;
  float decay_factor = 10.0f;
  std::vector<int> decay_epochs;
  std::uint64_t seed = 0;
  int log_every = 0;  // epochs between log lines; 0 disables
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  float lr = 0.0f;
};

using TrainLogger = std::function<void(const EpochStats&)>;

// Shuffles with a per-epoch seeded permutation. Returns per-epoch stats.
std::vector<EpochStats> train(NetworkGraph& net, const Dataset& data,
                              const TrainConfig& cfg,
                              const TrainLogger& log = nullptr);

double evaluate_accuracy(NetworkGraph& net, const Dataset& data,
                         int batch_size = 128);
double evaluate_loss(NetworkGraph& net, const Dataset& data,
                     int batch_size = 128);

}  // namespace nexprune
