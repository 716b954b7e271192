#include "nexprune/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"

namespace nexprune {

namespace {

Tensor gather_batch(const Dataset& data, const std::vector<int>& order,
                    int begin, int end, std::vector<int>& labels_out) {
  std::vector<int> shape = data.images.shape();
  shape[0] = end - begin;
  Tensor batch(shape);
  labels_out.resize(static_cast<std::size_t>(end - begin));
  const std::int64_t sz = data.images.numel() / data.size();
  for (int i = begin; i < end; ++i) {
    const int src_idx = order[static_cast<std::size_t>(i)];
    const float* src = data.images.data() + static_cast<std::size_t>(src_idx) * sz;
    float* dst = batch.data() + static_cast<std::size_t>(i - begin) * sz;
    std::copy(src, src + sz, dst);
    labels_out[static_cast<std::size_t>(i - begin)] =
        data.labels[static_cast<std::size_t>(src_idx)];
  }
  return batch;
}

int argmax_row(const float* p, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

}  // namespace

std::vector<EpochStats> train(NetworkGraph& net, const Dataset& data,
                              const TrainConfig& cfg, const TrainLogger& log) {
  data.validate();
  require(cfg.epochs >= 0 && cfg.batch_size > 0 && cfg.lr > 0.0f,
          ErrorCode::InvalidArgument, "bad training config");

  std::vector<EpochStats> stats;
  float lr = cfg.lr;
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (std::find(cfg.decay_epochs.begin(), cfg.decay_epochs.end(), epoch) !=
        cfg.decay_epochs.end())
      lr /= cfg.decay_factor;

    Rng rng = sub_rng(cfg.seed, 0xE90000 + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (int begin = 0; begin < data.size(); begin += cfg.batch_size) {
      const int end = std::min(begin + cfg.batch_size, data.size());
      std::vector<int> labels;
      Tensor batch = gather_batch(data, order, begin, end, labels);

      ForwardCache cache;
      Tensor logits = forward(net, batch, RunMode::Train, nullptr, nullptr, &cache);
      auto [loss, grad] = cross_entropy_loss(logits, labels);
      require(std::isfinite(loss), ErrorCode::Numeric, "training loss diverged");
      loss_sum += loss * (end - begin);

      const int classes = logits.dim(1);
      for (int b = 0; b < end - begin; ++b)
        if (argmax_row(logits.data() + static_cast<std::size_t>(b) * classes,
                       classes) == labels[static_cast<std::size_t>(b)])
          ++correct;

      GradientStore grads = backward(net, cache, grad);
      sgd_step(net, grads, lr);
    }

    EpochStats es;
    es.epoch = epoch;
    es.loss = loss_sum / data.size();
    es.train_accuracy = static_cast<double>(correct) / data.size();
    es.lr = lr;
    stats.push_back(es);
    if (log && cfg.log_every > 0 && (epoch % cfg.log_every == 0 || epoch == cfg.epochs - 1))
      log(es);
  }
  return stats;
}

double evaluate_accuracy(NetworkGraph& net, const Dataset& data, int batch_size) {
  data.validate();
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::int64_t correct = 0;
  for (int begin = 0; begin < data.size(); begin += batch_size) {
    const int end = std::min(begin + batch_size, data.size());
    std::vector<int> labels;
    Tensor batch = gather_batch(data, order, begin, end, labels);
    Tensor logits = forward(net, batch, RunMode::Eval, nullptr, nullptr, nullptr);
    const int classes = logits.dim(1);
    for (int b = 0; b < end - begin; ++b)
      if (argmax_row(logits.data() + static_cast<std::size_t>(b) * classes,
                     classes) == labels[static_cast<std::size_t>(b)])
        ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

double evaluate_loss(NetworkGraph& net, const Dataset& data, int batch_size) {
  data.validate();
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  double loss_sum = 0.0;
  for (int begin = 0; begin < data.size(); begin += batch_size) {
    const int end = std::min(begin + batch_size, data.size());
    std::vector<int> labels;
    Tensor batch = gather_batch(data, order, begin, end, labels);
    Tensor logits = forward(net, batch, RunMode::Eval, nullptr, nullptr, nullptr);
    auto [loss, grad] = cross_entropy_loss(logits, labels);
    loss_sum += loss * (end - begin);
  }
  return loss_sum / data.size();
}

}  // namespace nexprune
