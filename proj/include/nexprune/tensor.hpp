#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "nexprune/error.hpp"

namespace nexprune {

// Dense row-major float32 tensor. The single data carrier for inputs,
// weights, activations and gradients.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (int d : shape_) {
      require(d > 0, ErrorCode::InvalidArgument,
              "tensor extents must be positive");
      n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), 0.0f);
  }

  Tensor(std::vector<int> shape, std::vector<float> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    require(numel() == static_cast<std::int64_t>(data_.size()),
            ErrorCode::ShapeMismatch, "tensor data does not match shape");
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }

  std::int64_t numel() const {
    if (shape_.empty()) return 0;  // a shapeless tensor holds nothing
    std::int64_t n = 1;
    for (int d : shape_) n *= d;
    return n;
  }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  bool empty() const { return data_.empty(); }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (float v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  // 4-d accessor (n, c, h, w); used by the layer kernels.
  float& at4(int n, int c, int h, int w) {
    return data_[idx4(n, c, h, w)];
  }
  float at4(int n, int c, int h, int w) const {
    return data_[idx4(n, c, h, w)];
  }
  std::size_t idx4(int n, int c, int h, int w) const {
    return static_cast<std::size_t>(
        ((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) *
            shape_[3] +
        w);
  }

  // 2-d accessor (r, c).
  float& at2(int r, int c) {
    return data_[static_cast<std::size_t>(static_cast<std::int64_t>(r) * shape_[1] + c)];
  }
  float at2(int r, int c) const {
    return data_[static_cast<std::size_t>(static_cast<std::int64_t>(r) * shape_[1] + c)];
  }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

 private:
  std::vector<int> shape_;
  std::vector<float> data_;
};

inline void check_finite(const Tensor& t, const std::string& where) {
  if (!t.all_finite())
    fail(ErrorCode::Numeric, "non-finite values produced at " + where);
}

}  // namespace nexprune
