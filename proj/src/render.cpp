#include "tomo/render.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "parallel.hpp"
#include "tomo/cost_kernels.hpp"
#include "tomo/error.hpp"
#include "tomo/layers.hpp"

namespace tomo {

void RgbdScene::validate() const {
  if (color.width <= 0 || color.height <= 0) throw ConfigurationError("scene color image is empty");
  if (color.channels != 1 && color.channels != 3) throw ConfigurationError("scene color must have 1 or 3 channels");
  if (!color.same_shape(depth) || depth.channels != 1)
    throw ShapeError("depth map must be single-channel and match the color image size");
  for (double d : depth.data)
    if (!std::isfinite(d)) throw DomainError("depth map contains non-finite values");
}

Image depth_to_diopters(const Image& raw, DepthUnits units, double display_min, double display_max) {
  Image out = raw;
  switch (units) {
    case DepthUnits::diopters:
      break;
    case DepthUnits::meters:
      for (double& v : out.data) {
        if (!(v > 0.0)) throw DomainError("metric depth must be > 0");
        v = 1.0 / v;
      }
      break;
    case DepthUnits::affine: {
      if (raw.data.empty()) break;
      const auto [lo, hi] = std::minmax_element(raw.data.begin(), raw.data.end());
      const double span = *hi - *lo;
      for (double& v : out.data)
        v = span > 0.0 ? display_min + (v - *lo) / span * (display_max - display_min)
                       : 0.5 * (display_min + display_max);
      break;
    }
  }
  return out;
}

QuantizedDepth quantize_depth(const Image& depth, std::span<const double> layer_depths) {
  if (layer_depths.empty() || !strictly_increasing(layer_depths))
    throw ConfigurationError("layer depths must be non-empty and strictly increasing");
  QuantizedDepth q;
  q.width = depth.width;
  q.height = depth.height;
  q.layer.resize(depth.pixels());
  const auto plane = depth.plane(0);
  for (std::size_t p = 0; p < plane.size(); ++p) {
    const double z = plane[p];
    if (z < layer_depths.front() || z > layer_depths.back()) ++q.clamped;
    q.layer[p] = static_cast<int>(nearest_layer(z, layer_depths));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Schedule

bool SubframeSchedule::bijective() const {
  if (layer_of_subframe.size() != layer_depths.size()) return false;
  std::vector<int> seen(layer_depths.size(), 0);
  for (int l : layer_of_subframe) {
    if (l < 0 || static_cast<std::size_t>(l) >= seen.size() || seen[l]++) return false;
  }
  return true;
}

std::string SubframeSchedule::id() const {
  return std::string(waveform == Waveform::ramp ? "ramp" : "triangle") + "-" +
         std::to_string(layer_depths.size()) + "L-" + std::to_string(subframes_per_cycle) + "sf-" +
         std::to_string(static_cast<long long>(std::llround(cycle_rate * 1000))) + "mHz";
}

SubframeSchedule build_subframe_schedule(Waveform waveform, double cycle_rate, std::span<const double> layer_depths,
                                         int subframes_per_cycle) {
  const int n = static_cast<int>(layer_depths.size());
  if (n == 0 || !strictly_increasing(layer_depths)) throw ConfigurationError("layer depths must be strictly increasing");
  if (!(cycle_rate > 0.0)) throw ConfigurationError("cycle rate must be > 0");
  if (subframes_per_cycle == 0) subframes_per_cycle = n;
  if (subframes_per_cycle < n)
    throw ConfigurationError("infeasible schedule: " + std::to_string(subframes_per_cycle) +
                             " subframes cannot show " + std::to_string(n) + " layers");
  std::vector<int> order;
  order.reserve(n);
  if (waveform == Waveform::ramp) {
    for (int k = 0; k < n; ++k) order.push_back(k);
  } else {
    for (int k = 0; k < n; k += 2) order.push_back(k);
    for (int k = (n % 2 == 0) ? n - 1 : n - 2; k >= 1; k -= 2) order.push_back(k);
  }
  SubframeSchedule s;
  s.waveform = waveform;
  s.cycle_rate = cycle_rate;
  s.subframes_per_cycle = subframes_per_cycle;
  s.layer_depths.assign(layer_depths.begin(), layer_depths.end());
  s.layer_of_subframe.resize(subframes_per_cycle);
  for (int k = 0; k < subframes_per_cycle; ++k)
    s.layer_of_subframe[k] = order[static_cast<std::size_t>(static_cast<long long>(k) * n / subframes_per_cycle)];
  return s;
}

// ---------------------------------------------------------------------------
// Sequences

int BacklightSequence::lit_count(int y, int x) const {
  int count = 0;
  for (const auto& m : masks) count += m.at(y, x);
  return count;
}

void BacklightSequence::validate() const {
  if (masks.size() != schedule.layer_of_subframe.size())
    throw ManifestError("sequence has " + std::to_string(masks.size()) + " masks but the schedule lists " +
                        std::to_string(schedule.layer_of_subframe.size()) + " subframes");
  for (const auto& m : masks)
    if (m.width != display_image.width || m.height != display_image.height)
      throw ManifestError("mask size does not match the display image");
  for (int l : schedule.layer_of_subframe)
    if (l < 0 || static_cast<std::size_t>(l) >= schedule.layer_depths.size())
      throw ManifestError("schedule references a missing layer");
}

namespace {

void check_table_schedule(const StrategyTable& table, const SubframeSchedule& schedule) {
  if (table.layer_depths != schedule.layer_depths)
    throw ConfigurationError("strategy table and schedule use different layer grids");
  if (table.size() != table.layer_depths.size()) throw ConfigurationError("strategy table is incomplete");
  if (!schedule.bijective())
    throw ConfigurationError("rendering needs a schedule that shows every layer exactly once per cycle");
}

BacklightSequence make_sequence(const RgbdScene& scene, const SubframeSchedule& schedule, const StrategyTable& table,
                                const std::vector<const IlluminationStrategy*>& per_pixel, Execution exec) {
  BacklightSequence seq;
  seq.display_image = scene.color;
  seq.schedule = schedule;
  seq.table_id = table.id();
  const int w = scene.color.width;
  const int h = scene.color.height;
  seq.masks.assign(schedule.layer_of_subframe.size(), Mask(w, h));
  detail::for_each_index(static_cast<std::ptrdiff_t>(seq.masks.size()), exec, [&](std::ptrdiff_t k) {
    const auto layer = static_cast<std::size_t>(schedule.layer_of_subframe[k]);
    auto& mask = seq.masks[k].data;
    for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = (*per_pixel[p])[layer] ? 1 : 0;
  });
  return seq;
}

}  // namespace

BacklightSequence render_backlight_sequence(const RgbdScene& scene, const StrategyTable& table,
                                            const SubframeSchedule& schedule, Execution exec) {
  scene.validate();
  check_table_schedule(table, schedule);
  const QuantizedDepth q = quantize_depth(scene.depth, table.layer_depths);
  std::vector<const IlluminationStrategy*> per_pixel(q.layer.size());
  for (std::size_t p = 0; p < per_pixel.size(); ++p) per_pixel[p] = &table.strategy(q.layer[p]);
  return make_sequence(scene, schedule, table, per_pixel, exec);
}

// ---------------------------------------------------------------------------
// HDR

HdrOptions HdrOptions::from_luminance(const Image& luminance) {
  HdrOptions o;
  o.intensity = Image(luminance.width, luminance.height, 1);
  const auto src = luminance.plane(0);
  auto dst = o.intensity.plane(0);
  for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = 0.5 + std::clamp(src[p], 0.0, 1.0);
  return o;
}

int hdr_lit_count(double intensity, int optimal_lit, int layer_count) {
  if (!std::isfinite(intensity) || intensity < 0.0) throw DomainError("HDR intensity must be finite and >= 0");
  const int lo = static_cast<int>(std::ceil(0.5 * optimal_lit));
  const int hi = static_cast<int>(std::floor(1.5 * optimal_lit));
  int lit = static_cast<int>(std::lround(intensity * optimal_lit));
  lit = std::clamp(lit, lo, hi);
  return std::clamp(lit, 1, layer_count);
}

IlluminationStrategy rescale_strategy(const IlluminationStrategy& strategy, int lit, const StrategyProblem& problem) {
  const std::size_t n = strategy.size();
  if (lit < 1 || static_cast<std::size_t>(lit) > n) throw DomainError("lit count must lie in [1, n]");
  IlluminationStrategy current = strategy;
  while (current.lit_count() != lit) {
    const bool grow = current.lit_count() < lit;
    std::size_t pick = n;
    double pick_cost = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (current[j] == grow) continue;
      IlluminationStrategy trial = current;
      trial.set(j, grow);
      const double c = fast_cost(trial, problem);
      if (pick == n || c < pick_cost) {
        pick = j;
        pick_cost = c;
      }
    }
    current.set(pick, grow);
  }
  return current;
}

BacklightSequence render_hdr_sequence(const RgbdScene& scene, const StrategyTable& table,
                                      const SubframeSchedule& schedule, const HdrOptions& hdr,
                                      const ProblemTemplate& problems, Execution exec) {
  scene.validate();
  check_table_schedule(table, schedule);
  if (!hdr.intensity.same_shape(scene.color) || hdr.intensity.channels != 1)
    throw ShapeError("HDR intensity map must be single-channel and match the scene size");
  if (std::vector<double>(problems.bank()->layer_depths().begin(), problems.bank()->layer_depths().end()) !=
      table.layer_depths)
    throw ConfigurationError("problem template and strategy table use different layer grids");

  const int n = static_cast<int>(table.size());
  const QuantizedDepth q = quantize_depth(scene.depth, table.layer_depths);
  const auto intensity = hdr.intensity.plane(0);
  std::vector<std::pair<int, int>> wanted(q.layer.size());
  for (std::size_t p = 0; p < wanted.size(); ++p) {
    const int layer = q.layer[p];
    wanted[p] = {layer, hdr_lit_count(intensity[p], table.strategy(layer).lit_count(), n)};
  }

  std::vector<std::pair<int, int>> keys = wanted;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<IlluminationStrategy> variants(keys.size());
  detail::for_each_index(static_cast<std::ptrdiff_t>(keys.size()), exec, [&](std::ptrdiff_t k) {
    const auto [layer, lit] = keys[k];
    const IlluminationStrategy& base = table.strategy(layer);
    variants[k] = base.lit_count() == lit ? base
                                          : rescale_strategy(base, lit, problems.at_layer(static_cast<std::size_t>(layer)));
  });

  std::vector<const IlluminationStrategy*> per_pixel(wanted.size());
  for (std::size_t p = 0; p < wanted.size(); ++p) {
    const auto pos = std::lower_bound(keys.begin(), keys.end(), wanted[p]) - keys.begin();
    per_pixel[p] = &variants[pos];
  }
  return make_sequence(scene, schedule, table, per_pixel, exec);
}

// ---------------------------------------------------------------------------
// Field-curvature pre-compensation

double field_fraction(int x, int y, int width, int height) {
  const double cx = 0.5 * width;
  const double cy = 0.5 * height;
  return std::hypot(x + 0.5 - cx, y + 0.5 - cy) / std::hypot(cx, cy);
}

Precompensation precompensate_depth_map(const RgbdScene& scene, const AberrationSpec& aberrations,
                                        const OpticalConfig& config, std::span<const double> layer_depths) {
  scene.validate();
  if (layer_depths.empty()) throw ConfigurationError("empty layer grid");
  Precompensation out{scene, 0};
  const double lo = layer_depths.front();
  const double hi = layer_depths.back();
  for (int y = 0; y < scene.depth.height; ++y) {
    for (int x = 0; x < scene.depth.width; ++x) {
      const double offset =
          field_curvature_offset(field_fraction(x, y, scene.depth.width, scene.depth.height), aberrations, config);
      double z = scene.depth.at(0, y, x) - offset;
      if (z < lo || z > hi) {
        ++out.clamped;
        z = std::clamp(z, lo, hi);
      }
      out.scene.depth.at(0, y, x) = z;
    }
  }
  return out;
}

}  // namespace tomo
