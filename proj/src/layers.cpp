#include "tomo/layers.hpp"

#include <algorithm>
#include <cmath>

#include "tomo/error.hpp"

namespace tomo {

double LayerGrid::spacing() const {
  return (max_diopters - min_diopters) / count;
}

void LayerGrid::validate() const {
  if (count < 1) throw ConfigurationError("layer count must be >= 1");
  if (!std::isfinite(min_diopters) || !std::isfinite(max_diopters) || !(max_diopters > min_diopters))
    throw ConfigurationError("layer range must satisfy min < max");
}

std::vector<double> LayerGrid::depths() const {
  validate();
  std::vector<double> out(count);
  const double span = max_diopters - min_diopters;
  for (int k = 0; k < count; ++k) out[k] = min_diopters + (k + 1) * span / count;
  return out;
}

std::vector<double> accommodation_planes(double min_diopters, double max_diopters, int m) {
  if (m < 1) throw ConfigurationError("need at least one accommodation plane");
  if (m == 1) return {min_diopters};
  if (!(max_diopters > min_diopters)) throw ConfigurationError("plane range must satisfy min < max");
  std::vector<double> out(m);
  const double span = max_diopters - min_diopters;
  for (int i = 0; i < m; ++i) out[i] = min_diopters + i * span / (m - 1);
  return out;
}

std::size_t nearest_layer(double z, std::span<const double> depths) {
  if (depths.empty()) throw ConfigurationError("empty layer grid");
  auto it = std::lower_bound(depths.begin(), depths.end(), z);
  if (it == depths.begin()) return 0;
  if (it == depths.end()) return depths.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - depths.begin());
  const std::size_t lo = hi - 1;
  return (z - depths[lo] <= depths[hi] - z) ? lo : hi;
}

bool strictly_increasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1])) return false;
  return true;
}

}  // namespace tomo
