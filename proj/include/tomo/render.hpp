#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tomo/execution.hpp"
#include "tomo/image.hpp"
#include "tomo/optics.hpp"
#include "tomo/strategy.hpp"

namespace tomo {

struct RgbdScene {
  Image color;  // linear intensity in [0, 1], 1 or 3 channels
  Image depth;  // single channel, diopters

  void validate() const;
};

// How raw depth samples map to diopters.
//  diopters: used as-is.
//  meters:   1 / meters.
//  affine:   the map's own [min, max] is stretched onto the display range.
enum class DepthUnits { diopters, meters, affine };

Image depth_to_diopters(const Image& raw, DepthUnits units, double display_min, double display_max);

struct QuantizedDepth {
  int width = 0;
  int height = 0;
  std::vector<int> layer;   // nearest layer per pixel
  std::size_t clamped = 0;  // pixels outside [first layer, last layer]
};

QuantizedDepth quantize_depth(const Image& depth, std::span<const double> layer_depths);

enum class Waveform { ramp, triangle };

struct SubframeSchedule {
  Waveform waveform = Waveform::ramp;
  double cycle_rate = 60.0;  // Hz
  int subframes_per_cycle = 0;
  std::vector<int> layer_of_subframe;
  std::vector<double> layer_depths;

  double subframe_rate() const { return cycle_rate * subframes_per_cycle; }
  // True when every layer is shown exactly once per cycle.
  bool bijective() const;
  std::string id() const;
};

// ramp: subframe k shows layer k, ascending. triangle: odd 1-based layers on
// the rising half, even ones on the falling half. With more subframes than
// layers each layer dwells for a proportional run of subframes.
SubframeSchedule build_subframe_schedule(Waveform waveform, double cycle_rate,
                                         std::span<const double> layer_depths, int subframes_per_cycle = 0);

struct BacklightSequence {
  std::vector<Mask> masks;  // one per subframe, schedule order
  Image display_image;
  SubframeSchedule schedule;
  std::string table_id;

  const std::vector<double>& layer_depths() const { return schedule.layer_depths; }
  int width() const { return display_image.width; }
  int height() const { return display_image.height; }
  int lit_count(int y, int x) const;
  void validate() const;
};

BacklightSequence render_backlight_sequence(const RgbdScene& scene, const StrategyTable& table,
                                            const SubframeSchedule& schedule,
                                            Execution exec = Execution::parallel);

// Per-pixel relative luminance factors; the lit-subframe count scales linearly
// with them inside [ceil(0.5 A), floor(1.5 A)].
struct HdrOptions {
  Image intensity;

  // Linear map of a [0, 1] luminance image onto factors in [0.5, 1.5].
  static HdrOptions from_luminance(const Image& luminance);
};

int hdr_lit_count(double intensity, int optimal_lit, int layer_count);

// Adds or removes lit subframes one at a time, each step taking the change
// with the smallest resulting cost.
IlluminationStrategy rescale_strategy(const IlluminationStrategy& strategy, int lit, const StrategyProblem& problem);

BacklightSequence render_hdr_sequence(const RgbdScene& scene, const StrategyTable& table,
                                      const SubframeSchedule& schedule, const HdrOptions& hdr,
                                      const ProblemTemplate& problems, Execution exec = Execution::parallel);

// Radial distance of the pixel center from the image center over the half diagonal.
double field_fraction(int x, int y, int width, int height);

struct Precompensation {
  RgbdScene scene;
  std::size_t clamped = 0;
};

Precompensation precompensate_depth_map(const RgbdScene& scene, const AberrationSpec& aberrations,
                                        const OpticalConfig& config, std::span<const double> layer_depths);

}  // namespace tomo
