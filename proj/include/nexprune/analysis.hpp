#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nexprune/scoring.hpp"

namespace nexprune {

// Score maps rasterized to a rectangle for visual and metric comparison:
// one row per conv layer, each row linearly interpolated to the widest
// layer's filter count. `valid` marks positions inside the original row
// before interpolation (column j of row l is valid when j < filters_l).
struct MapRaster {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;  // row-major
  std::vector<char> valid;

  float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

MapRaster rasterize_score_map(const ScoreMap& map);

// Endpoint-aligned linear interpolation of a row to `target` samples.
// A single-value row broadcasts to a constant.
std::vector<float> interpolate_row(const std::vector<float>& row, int target);

// Similarity and distance metrics between two equally sized vectors.
double euclidean_distance(const std::vector<float>& a, const std::vector<float>& b);
double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);
// Pearson is undefined when either side is constant; absent in that case.
std::optional<double> pearson_correlation(const std::vector<float>& a,
                                          const std::vector<float>& b);
// Mean local SSIM over an 8x8 box window (clipped to the raster size),
// stride 1, dynamic range 1.0.
double ssim(const MapRaster& a, const MapRaster& b);

enum class CompareScope { All, FirstN };

struct MapComparison {
  double euclidean = 0.0;
  double cosine = 0.0;
  std::optional<double> pearson;
  double ssim_value = 0.0;
};

// Compare two maps over the same architecture. FirstN restricts every
// metric to the first `first_n` conv layers.
MapComparison compare_score_maps(const ScoreMap& a, const ScoreMap& b,
                                 CompareScope scope = CompareScope::All,
                                 int first_n = 0);

// Cosine over the flat (layer, filter) score vectors, no rasterization.
double map_cosine(const ScoreMap& a, const ScoreMap& b);

}  // namespace nexprune
