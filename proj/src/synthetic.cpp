#include "nexprune/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nexprune/error.hpp"
#include "nexprune/rng.hpp"

namespace nexprune {

Dataset Dataset::subset(const std::vector<int>& indices) const {
  validate();
  std::vector<int> shape = images.shape();
  shape[0] = static_cast<int>(indices.size());
  Dataset out;
  out.images = Tensor(shape);
  out.labels.reserve(indices.size());
  out.num_classes = num_classes;
  const std::int64_t sz = images.numel() / size();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    require(idx >= 0 && idx < size(), ErrorCode::InvalidArgument,
            "subset index out of range");
    const float* src = images.data() + static_cast<std::size_t>(idx) * sz;
    float* dst = out.images.data() + i * sz;
    std::copy(src, src + sz, dst);
    out.labels.push_back(labels[static_cast<std::size_t>(idx)]);
  }
  return out;
}

Dataset Dataset::slice(int begin, int end) const {
  require(begin >= 0 && end >= begin && end <= size(), ErrorCode::InvalidArgument,
          "slice range out of bounds");
  std::vector<int> idx(static_cast<std::size_t>(end - begin));
  for (int i = begin; i < end; ++i) idx[static_cast<std::size_t>(i - begin)] = i;
  return subset(idx);
}

void Dataset::validate() const {
  require(!images.empty() && images.rank() == 4, ErrorCode::ShapeMismatch,
          "dataset images must be (N,C,H,W)");
  require(static_cast<int>(labels.size()) == images.dim(0), ErrorCode::ShapeMismatch,
          "label count does not match image count");
  require(num_classes >= 2, ErrorCode::InvalidArgument, "need at least 2 classes");
  for (int l : labels)
    require(l >= 0 && l < num_classes, ErrorCode::InvalidArgument,
            "label out of range");
}

Dataset make_synthetic_dataset(const SyntheticConfig& cfg) {
  require(cfg.num_samples > 0 && cfg.num_classes >= 2 && cfg.channels > 0 &&
              cfg.height > 0 && cfg.width > 0,
          ErrorCode::InvalidArgument, "bad synthetic config");

  // Class geometry depends only on (seed, class).
  struct ClassShape {
    float cx, cy;
    std::vector<float> amps;
  };
  std::vector<ClassShape> shapes;
  shapes.reserve(static_cast<std::size_t>(cfg.num_classes));
  for (int c = 0; c < cfg.num_classes; ++c) {
    Rng rng = sub_rng(cfg.seed, 0xC1000 + static_cast<std::uint64_t>(c));
    ClassShape s;
    s.cx = uniform_float(rng, 0.25f, 0.75f) * static_cast<float>(cfg.width - 1);
    s.cy = uniform_float(rng, 0.25f, 0.75f) * static_cast<float>(cfg.height - 1);
    s.amps.resize(static_cast<std::size_t>(cfg.channels));
    for (float& a : s.amps) a = uniform_float(rng, 0.2f, 1.0f);
    shapes.push_back(std::move(s));
  }

  Dataset data;
  data.images = Tensor({cfg.num_samples, cfg.channels, cfg.height, cfg.width});
  data.labels.resize(static_cast<std::size_t>(cfg.num_samples));
  data.num_classes = cfg.num_classes;

  const float inv_two_sigma2 = 1.0f / (2.0f * cfg.blob_sigma * cfg.blob_sigma);
  for (int i = 0; i < cfg.num_samples; ++i) {
    const int label = i % cfg.num_classes;  // balanced, deterministic
    data.labels[static_cast<std::size_t>(i)] = label;
    const ClassShape& s = shapes[static_cast<std::size_t>(label)];
    // Per-sample stream keyed by index so prefixes of a larger dataset
    // equal a smaller dataset with the same seed.
    Rng rng = sub_rng(cfg.seed, 0x5A0000 + static_cast<std::uint64_t>(i));
    const float cx = s.cx + normal_float(rng, 0.0f, cfg.jitter);
    const float cy = s.cy + normal_float(rng, 0.0f, cfg.jitter);
    for (int ch = 0; ch < cfg.channels; ++ch) {
      float* px = data.images.data() + data.images.idx4(i, ch, 0, 0);
      const float amp = s.amps[static_cast<std::size_t>(ch)];
      for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
          const float dx = static_cast<float>(x) - cx;
          const float dy = static_cast<float>(y) - cy;
          float v = amp * std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
          v += normal_float(rng, 0.0f, cfg.noise_sigma);
          px[y * cfg.width + x] = std::clamp(v, 0.0f, 1.0f);
        }
    }
  }
  return data;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             float train_fraction,
                                             std::uint64_t seed) {
  data.validate();
  require(train_fraction > 0.0f && train_fraction < 1.0f, ErrorCode::InvalidArgument,
          "train fraction must lie strictly between 0 and 1");
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < data.size(); ++i)
    by_class[data.labels[static_cast<std::size_t>(i)]].push_back(i);

  std::vector<int> train_idx, test_idx;
  for (auto& [label, idxs] : by_class) {
    Rng rng = sub_rng(seed, 0x3B000 + static_cast<std::uint64_t>(label));
    std::shuffle(idxs.begin(), idxs.end(), rng);
    const int n_train = static_cast<int>(
        static_cast<float>(idxs.size()) * train_fraction);
    for (std::size_t i = 0; i < idxs.size(); ++i)
      (static_cast<int>(i) < n_train ? train_idx : test_idx).push_back(idxs[i]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

}  // namespace nexprune
