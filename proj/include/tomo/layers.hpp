#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tomo {

// Uniform dioptric layer grid: `count` layers spanning (min, max], spaced
// (max - min) / count apart, the top layer sitting exactly at max.
struct LayerGrid {
  int count = 80;
  double min_diopters = 0.0;
  double max_diopters = 5.5;

  double spacing() const;
  std::vector<double> depths() const;
  void validate() const;
};

// m accommodation planes spanning [min, max] inclusive. With m = count + 1 the
// planes coincide with {min} ∪ layer depths.
std::vector<double> accommodation_planes(double min_diopters, double max_diopters, int m);

// Nearest entry of a strictly increasing grid. Exact midpoints resolve to the
// lower index; values outside the grid clamp to the nearest end.
std::size_t nearest_layer(double z, std::span<const double> depths);

bool strictly_increasing(std::span<const double> values);

}  // namespace tomo
