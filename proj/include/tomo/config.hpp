#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tomo/contrast.hpp"
#include "tomo/layers.hpp"
#include "tomo/optics.hpp"
#include "tomo/perception.hpp"
#include "tomo/render.hpp"
#include "tomo/simulate.hpp"
#include "tomo/strategy.hpp"

namespace tomo {

// Everything the command-line tool reads from its TOML file. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
struct ToolConfig {
  OpticalConfig optics;
  AberrationSpec aberrations;

  LayerGrid layers;
  int accommodation_planes = 0;  // 0 selects layers.count + 1

  double dc_noise = 0.0;

  double a_low_fraction = 0.0;
  std::optional<int> a_low;  // explicit subframe count, overrides the fraction
  PenaltySpec penalty;

  GaParams ga;
  Solver solver = Solver::ga;

  CsfModel csf;
  SpectrumMode spectrum_mode = SpectrumMode::complex;

  Waveform waveform = Waveform::ramp;
  double cycle_rate = 60.0;
  int subframes_per_cycle = 0;

  double field_of_view = 30.0;
  LuminanceMode luminance = LuminanceMode::normalized;
  double depth_resolution = 0.02;
  std::vector<double> channel_wavelengths;
  std::vector<double> focal_depths;  // empty: 7 planes over the layer range
  DepthUnits depth_units = DepthUnits::diopters;

  int contrast_targets = 160;
  int contrast_planes = 160;
  ContrastReduction contrast_reduction = ContrastReduction::mean;
  double contrast_slice_frequency = 6.0;

  int brightness_bound() const;
  std::vector<double> plane_depths() const;
  std::vector<double> focal_stack_depths() const;
  SimulationConfig simulation() const;
  void validate() const;
};

// Relative zernike_file paths resolve against `base_dir`.
ToolConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
ToolConfig load_config(const std::filesystem::path& path);

}  // namespace tomo
