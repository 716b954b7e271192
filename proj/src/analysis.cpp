#include "nexprune/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "nexprune/error.hpp"

namespace nexprune {

std::vector<float> interpolate_row(const std::vector<float>& row, int target) {
  require(!row.empty() && target > 0, ErrorCode::InvalidArgument,
          "interpolation needs data and a positive target width");
  const int n = static_cast<int>(row.size());
  std::vector<float> out(static_cast<std::size_t>(target));
  if (n == 1 || target == 1) {
    std::fill(out.begin(), out.end(), row[0]);
    if (target == 1 && n > 1) out[0] = row[0];
    return out;
  }
  // Endpoint aligned: position j maps to source coordinate j*(n-1)/(t-1).
  for (int j = 0; j < target; ++j) {
    const double pos = static_cast<double>(j) * (n - 1) / (target - 1);
    int i0 = static_cast<int>(pos);
    if (i0 >= n - 1) i0 = n - 2;
    const double frac = pos - i0;
    out[static_cast<std::size_t>(j)] = static_cast<float>(
        row[static_cast<std::size_t>(i0)] * (1.0 - frac) +
        row[static_cast<std::size_t>(i0) + 1] * frac);
  }
  return out;
}

MapRaster rasterize_score_map(const ScoreMap& map) {
  require(!map.scores.empty(), ErrorCode::InvalidArgument, "empty score map");
  int cols = 0;
  for (const auto& [layer, vals] : map.scores)
    cols = std::max(cols, static_cast<int>(vals.size()));
  require(cols > 0, ErrorCode::InvalidArgument, "score map has no filters");

  MapRaster r;
  r.rows = static_cast<int>(map.scores.size());
  r.cols = cols;
  r.values.reserve(static_cast<std::size_t>(r.rows) * cols);
  r.valid.reserve(static_cast<std::size_t>(r.rows) * cols);
  for (const auto& [layer, vals] : map.scores) {
    const std::vector<float> row = interpolate_row(vals, cols);
    r.values.insert(r.values.end(), row.begin(), row.end());
    for (int j = 0; j < cols; ++j)
      r.valid.push_back(j < static_cast<int>(vals.size()) ? 1 : 0);
  }
  return r;
}

double euclidean_distance(const std::vector<float>& a, const std::vector<float>& b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "vector sizes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "vector sizes differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  // A zero vector has no direction; similarity is defined as 0.
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<double> pearson_correlation(const std::vector<float>& a,
                                          const std::vector<float>& b) {
  require(a.size() == b.size(), ErrorCode::ShapeMismatch, "vector sizes differ");
  require(!a.empty(), ErrorCode::InvalidArgument, "empty vectors");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return cov / (std::sqrt(va) * std::sqrt(vb));
}

double ssim(const MapRaster& a, const MapRaster& b) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::ShapeMismatch,
          "raster sizes differ");
  // Box window, stride 1, dynamic range 1. Window shrinks to the raster
  // when a side is below 8.
  const int wh = std::min(8, a.rows);
  const int ww = std::min(8, a.cols);
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const double inv_n = 1.0 / (wh * ww);

  double total = 0.0;
  int windows = 0;
  for (int y = 0; y + wh <= a.rows; ++y) {
    for (int x = 0; x + ww <= a.cols; ++x) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int dy = 0; dy < wh; ++dy)
        for (int dx = 0; dx < ww; ++dx) {
          mu_a += a.at(y + dy, x + dx);
          mu_b += b.at(y + dy, x + dx);
        }
      mu_a *= inv_n;
      mu_b *= inv_n;
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int dy = 0; dy < wh; ++dy)
        for (int dx = 0; dx < ww; ++dx) {
          const double da = a.at(y + dy, x + dx) - mu_a;
          const double db = b.at(y + dy, x + dx) - mu_b;
          var_a += da * da;
          var_b += db * db;
          cov += da * db;
        }
      var_a *= inv_n;
      var_b *= inv_n;
      cov *= inv_n;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      total += num / den;
      ++windows;
    }
  }
  require(windows > 0, ErrorCode::InvalidArgument, "raster smaller than a window");
  return total / windows;
}

namespace {

ScoreMap restrict_map(const ScoreMap& m, int first_n) {
  ScoreMap out;
  out.provenance = m.provenance;
  int taken = 0;
  for (const auto& [layer, vals] : m.scores) {
    if (taken >= first_n) break;
    out.scores[layer] = vals;
    ++taken;
  }
  return out;
}

}  // namespace

MapComparison compare_score_maps(const ScoreMap& a, const ScoreMap& b,
                                 CompareScope scope, int first_n) {
  require(a.same_structure(b), ErrorCode::KeyMismatch,
          "score maps cover different conv structures");
  const ScoreMap* pa = &a;
  const ScoreMap* pb = &b;
  ScoreMap ra, rb;
  if (scope == CompareScope::FirstN) {
    require(first_n > 0 && first_n <= static_cast<int>(a.scores.size()),
            ErrorCode::InvalidArgument, "first_n out of range");
    ra = restrict_map(a, first_n);
    rb = restrict_map(b, first_n);
    pa = &ra;
    pb = &rb;
  }
  const MapRaster raster_a = rasterize_score_map(*pa);
  const MapRaster raster_b = rasterize_score_map(*pb);

  MapComparison cmp;
  cmp.euclidean = euclidean_distance(raster_a.values, raster_b.values);
  cmp.cosine = cosine_similarity(raster_a.values, raster_b.values);
  cmp.pearson = pearson_correlation(raster_a.values, raster_b.values);
  cmp.ssim_value = ssim(raster_a, raster_b);
  return cmp;
}

double map_cosine(const ScoreMap& a, const ScoreMap& b) {
  require(a.same_structure(b), ErrorCode::KeyMismatch,
          "score maps cover different conv structures");
  return cosine_similarity(a.flat(), b.flat());
}

}  // namespace nexprune
