#include "tomo/contrast.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "parallel.hpp"
#include "tomo/error.hpp"
#include "tomo/layers.hpp"

namespace tomo {

bool ContrastMap::same_grid(const ContrastMap& other) const {
  return target_depths == other.target_depths && accommodation_depths == other.accommodation_depths &&
         values.size() == other.values.size();
}

namespace {

double reduce(std::span<const Complex> p, std::span<const double> weights, std::span<const double> freqs,
              const ContrastOptions& options) {
  switch (options.reduction) {
    case ContrastReduction::mean: {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t f = 0; f < p.size(); ++f) {
        num += weights[f] * std::abs(p[f]);
        den += weights[f];
      }
      return den > 0.0 ? num / den : 0.0;
    }
    case ContrastReduction::max: {
      double best = 0.0;
      for (std::size_t f = 0; f < p.size(); ++f) best = std::max(best, weights[f] * std::abs(p[f]));
      return best;
    }
    case ContrastReduction::slice: {
      const double f = options.slice_frequency;
      if (f <= freqs.front()) return std::abs(p.front());
      if (f >= freqs.back()) return std::abs(p.back());
      const auto k = static_cast<std::size_t>(std::upper_bound(freqs.begin(), freqs.end(), f) - freqs.begin());
      const double t = (f - freqs[k - 1]) / (freqs[k] - freqs[k - 1]);
      return (1.0 - t) * std::abs(p[k - 1]) + t * std::abs(p[k]);
    }
  }
  return 0.0;
}

void check_options(const ContrastOptions& options, std::span<const double> targets) {
  if (options.reduction == ContrastReduction::slice && !(options.slice_frequency >= 0.0))
    throw DomainError("slice frequency must be >= 0");
  if (targets.empty()) throw ConfigurationError("contrast map needs at least one target depth");
  for (double z : targets)
    if (!std::isfinite(z)) throw DomainError("non-finite target depth");
}

void normalize(ContrastMap& map) {
  const double peak = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  if (peak > 0.0)
    for (double& v : map.values) v /= peak;
}

ContrastMap empty_map(const OtfBank& bank, std::span<const double> targets) {
  ContrastMap map;
  map.target_depths.assign(targets.begin(), targets.end());
  map.accommodation_depths.assign(bank.accommodation_depths().begin(), bank.accommodation_depths().end());
  map.values.assign(targets.size() * bank.planes(), 0.0);
  return map;
}

std::vector<double> rows_or_layers(const ContrastOptions& options, std::span<const double> layers) {
  if (!options.target_depths.empty()) return options.target_depths;
  return {layers.begin(), layers.end()};
}

}  // namespace

ContrastMap contrast_map_from_rows(const OtfBank& bank, std::span<const double> target_depths,
                                   std::span<const IlluminationStrategy> rows, double dc_noise,
                                   std::span<const double> weights, const ContrastOptions& options, Execution exec) {
  check_options(options, target_depths);
  if (rows.size() != target_depths.size()) throw ShapeError("one strategy per target row is required");
  if (weights.size() != bank.samples()) throw ShapeError("weights do not match the bank's frequency grid");
  ContrastMap map = empty_map(bank, target_depths);
  const std::size_t m = bank.planes();
  const std::size_t n = bank.layers();
  const std::size_t samples = bank.samples();
  detail::for_each_index(static_cast<std::ptrdiff_t>(rows.size()), exec, [&](std::ptrdiff_t t) {
    const IlluminationStrategy& b = rows[t];
    if (b.size() != n) throw ShapeError("strategy length does not match the bank's layer count");
    const double a = b.illumination_time(dc_noise);
    if (!(a > 0.0)) throw DegenerateStrategyError("illumination time is zero");
    Spectrum p(samples);
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(p.begin(), p.end(), Complex{});
      for (std::size_t j = 0; j < n; ++j) {
        const double w = ((b[j] ? 1.0 : 0.0) + dc_noise) / a;
        if (w == 0.0) continue;
        const Spectrum& h = bank.at(i, j);
        for (std::size_t f = 0; f < samples; ++f) p[f] += w * h[f];
      }
      map.values[t * m + i] = reduce(p, weights, bank.frequencies(), options);
    }
  });
  normalize(map);
  return map;
}

ContrastMap ideal_contrast_map(const OtfBank& bank, std::span<const double> target_depths,
                               std::span<const double> weights, const ContrastOptions& options, Execution exec) {
  check_options(options, target_depths);
  if (weights.size() != bank.samples()) throw ShapeError("weights do not match the bank's frequency grid");
  ContrastMap map = empty_map(bank, target_depths);
  const std::size_t m = bank.planes();
  const auto planes = bank.accommodation_depths();

  // Transfer functions depend only on the defocus, so compute each one once.
  std::vector<std::int64_t> keys(target_depths.size() * m);
  for (std::size_t t = 0; t < target_depths.size(); ++t)
    for (std::size_t i = 0; i < m; ++i) keys[t * m + i] = defocus_key(planes[i] - target_depths[t]);
  std::vector<std::int64_t> unique = keys;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> reduced(unique.size());
  const auto freqs = bank.frequencies();
  detail::for_each_index(static_cast<std::ptrdiff_t>(unique.size()), exec, [&](std::ptrdiff_t u) {
    const Spectrum h =
        pupil_otf_surface(defocus_from_key(unique[u]), bank.optics(), bank.aberrations(), bank.optics().max_frequency)
            .profile(freqs);
    reduced[u] = reduce(h, weights, freqs, options);
  });
  for (std::size_t k = 0; k < keys.size(); ++k)
    map.values[k] = reduced[std::lower_bound(unique.begin(), unique.end(), keys[k]) - unique.begin()];
  normalize(map);
  return map;
}

ContrastMap contrast_map(const StrategyTable& table, const ProblemTemplate& problems, const ContrastOptions& options,
                         Execution exec) {
  const OtfBank& bank = *problems.bank();
  if (!std::equal(table.layer_depths.begin(), table.layer_depths.end(), bank.layer_depths().begin(),
                  bank.layer_depths().end()))
    throw ConfigurationError("strategy table and problem template use different layer grids");
  if (table.size() != table.layer_depths.size()) throw ConfigurationError("strategy table is incomplete");
  const std::vector<double> targets = rows_or_layers(options, table.layer_depths);
  std::vector<IlluminationStrategy> rows;
  rows.reserve(targets.size());
  for (double z : targets) rows.push_back(table.strategy(nearest_layer(z, table.layer_depths)));
  return contrast_map_from_rows(bank, targets, rows, table.dc_noise, problems.weights(), options, exec);
}

ContrastMap target_contrast_map(const ProblemTemplate& problems, const ContrastOptions& options, Execution exec) {
  const OtfBank& bank = *problems.bank();
  const std::vector<double> targets = rows_or_layers(options, bank.layer_depths());
  return ideal_contrast_map(bank, targets, problems.weights(), options, exec);
}

ContrastMap contrast_error(const ContrastMap& map, const ContrastMap& target) {
  if (!map.same_grid(target)) throw ShapeError("contrast maps are on different grids");
  ContrastMap out = map;
  for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = target.values[k] - map.values[k];
  return out;
}

double summed_magnitude(const ContrastMap& map) {
  double sum = 0.0;
  for (double v : map.values) sum += std::abs(v);
  return sum;
}

}  // namespace tomo
