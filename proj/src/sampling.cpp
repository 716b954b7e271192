#include "nexprune/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"

namespace nexprune {

const char* sampling_strategy_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::Random: return "random";
    case SamplingStrategy::KMeans: return "kmeans";
    case SamplingStrategy::Noise: return "noise";
    case SamplingStrategy::Full: return "full";
  }
  return "unknown";
}

SamplingStrategy sampling_strategy_from_name(const std::string& name) {
  if (name == "random") return SamplingStrategy::Random;
  if (name == "kmeans") return SamplingStrategy::KMeans;
  if (name == "noise") return SamplingStrategy::Noise;
  if (name == "full") return SamplingStrategy::Full;
  fail(ErrorCode::InvalidArgument, "unknown sampling strategy: " + name);
}

KMeansResult kmeans(const std::vector<std::vector<float>>& points, int k,
                    int max_iters, std::uint64_t seed) {
  require(k > 0, ErrorCode::InvalidArgument, "k must be positive");
  require(static_cast<int>(points.size()) >= k, ErrorCode::InvalidArgument,
          "fewer points than clusters");
  const int n = static_cast<int>(points.size());
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    require(p.size() == dim, ErrorCode::ShapeMismatch, "ragged point set");

  Rng rng = make_rng(seed);
  KMeansResult res;
  const std::vector<int> init = sample_without_replacement(rng, n, k);
  res.centroids.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    res.centroids[static_cast<std::size_t>(c)] =
        points[static_cast<std::size_t>(init[static_cast<std::size_t>(c)])];
  res.assignment.assign(static_cast<std::size_t>(n), 0);

  auto sq_dist = [dim](const std::vector<float>& a, const std::vector<float>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double t = static_cast<double>(a[i]) - b[i];
      d += t * t;
    }
    return d;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    // Assign step; ties go to the lowest cluster index.
    double objective = 0.0;
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(points[static_cast<std::size_t>(i)],
                                 res.centroids[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      if (res.assignment[static_cast<std::size_t>(i)] != best_c) {
        res.assignment[static_cast<std::size_t>(i)] = best_c;
        changed = true;
      }
      objective += best;
    }
    res.objective_trace.push_back(objective);
    if (!changed && iter > 0) break;

    // Update step; an empty cluster keeps its previous centroid.
    std::vector<std::vector<double>> sums(
        static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      const int c = res.assignment[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      const auto& p = points[static_cast<std::size_t>(i)];
      auto& s = sums[static_cast<std::size_t>(c)];
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      auto& ct = res.centroids[static_cast<std::size_t>(c)];
      const auto& s = sums[static_cast<std::size_t>(c)];
      const double inv = 1.0 / counts[static_cast<std::size_t>(c)];
      for (std::size_t d = 0; d < dim; ++d)
        ct[d] = static_cast<float>(s[d] * inv);
    }
  }
  return res;
}

namespace {

std::vector<float> flat_image(const Dataset& data, int idx) {
  const std::int64_t sz = data.images.numel() / data.size();
  const float* p = data.images.data() + static_cast<std::size_t>(idx) * sz;
  return std::vector<float>(p, p + sz);
}

// Per class: cluster that class's images and keep the sample nearest each
// final centroid, never reusing a sample. Classes are visited in index
// order and per-class budgets differ by at most one.
std::vector<int> kmeans_indices(const Dataset& data, const SamplingConfig& cfg) {
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < data.size(); ++i)
    by_class[data.labels[static_cast<std::size_t>(i)]].push_back(i);

  const int classes = static_cast<int>(by_class.size());
  require(classes > 0, ErrorCode::InvalidArgument, "empty dataset");
  const int base = cfg.num_samples / classes;
  const int extra = cfg.num_samples % classes;

  std::vector<int> chosen;
  int class_rank = 0;
  for (const auto& [label, idxs] : by_class) {
    int budget = base + (class_rank < extra ? 1 : 0);
    ++class_rank;
    budget = std::min(budget, static_cast<int>(idxs.size()));
    if (budget <= 0) continue;

    std::vector<std::vector<float>> pts;
    pts.reserve(idxs.size());
    for (int i : idxs) pts.push_back(flat_image(data, i));
    const KMeansResult km = kmeans(pts, budget, cfg.kmeans_max_iters,
                                   cfg.seed ^ static_cast<std::uint64_t>(label));

    std::vector<char> used(idxs.size(), 0);
    for (int c = 0; c < budget; ++c) {
      double best = std::numeric_limits<double>::infinity();
      int best_i = -1;
      const auto& ct = km.centroids[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < idxs.size(); ++i) {
        if (used[i]) continue;
        double d = 0.0;
        for (std::size_t j = 0; j < ct.size(); ++j) {
          const double t = static_cast<double>(pts[i][j]) - ct[j];
          d += t * t;
        }
        if (d < best) {
          best = d;
          best_i = static_cast<int>(i);
        }
      }
      used[static_cast<std::size_t>(best_i)] = 1;
      chosen.push_back(idxs[static_cast<std::size_t>(best_i)]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

std::vector<int> sample_indices(const Dataset& data, const SamplingConfig& cfg) {
  data.validate();
  switch (cfg.strategy) {
    case SamplingStrategy::Random: {
      require(cfg.num_samples > 0 && cfg.num_samples <= data.size(),
              ErrorCode::InvalidArgument, "sample count out of range");
      Rng rng = make_rng(cfg.seed);
      std::vector<int> idx = sample_without_replacement(rng, data.size(), cfg.num_samples);
      std::sort(idx.begin(), idx.end());
      return idx;
    }
    case SamplingStrategy::KMeans:
      require(cfg.num_samples > 0 && cfg.num_samples <= data.size(),
              ErrorCode::InvalidArgument, "sample count out of range");
      return kmeans_indices(data, cfg);
    case SamplingStrategy::Noise:
      return {};
    case SamplingStrategy::Full: {
      std::vector<int> idx(static_cast<std::size_t>(data.size()));
      for (int i = 0; i < data.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
      return idx;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown sampling strategy");
}

Tensor sample_batch(const Dataset& data, const SamplingConfig& cfg) {
  if (cfg.strategy == SamplingStrategy::Noise) {
    require(cfg.num_samples > 0, ErrorCode::InvalidArgument,
            "sample count must be positive");
    require(cfg.noise_hi > cfg.noise_lo, ErrorCode::InvalidArgument,
            "noise range is empty");
    std::vector<int> shape = data.images.shape();
    shape[0] = cfg.num_samples;
    Tensor batch(shape);
    Rng rng = make_rng(cfg.seed);
    float* p = batch.data();
    for (std::int64_t i = 0; i < batch.numel(); ++i)
      p[i] = uniform_float(rng, cfg.noise_lo, cfg.noise_hi);
    return batch;
  }
  return data.subset(sample_indices(data, cfg)).images;
}

}  // namespace nexprune
