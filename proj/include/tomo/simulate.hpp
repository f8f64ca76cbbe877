#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tomo/execution.hpp"
#include "tomo/image.hpp"
#include "tomo/optics.hpp"
#include "tomo/render.hpp"

namespace tomo {

// How the subframe sum is normalized.
//  normalized: per-pixel 1 / sum_k (mask_k + c), so every strategy shows the
//              display image at full brightness.
//  absolute:   1 / subframes_per_cycle, i.e. time-averaged luminance; a pixel
//              lit in one of n subframes appears at 1/n brightness.
enum class LuminanceMode { normalized, absolute };

struct SimulationConfig {
  std::vector<double> accommodation_depths;
  OpticalConfig optics;
  AberrationSpec aberrations;
  double dc_noise = 0.0;
  double field_of_view = 30.0;  // degrees across the image width
  LuminanceMode luminance = LuminanceMode::normalized;
  // Effective image depths (layer depth plus field-curvature offset) are
  // grouped in bins of this width before convolution.
  double depth_resolution = 0.02;
  // One wavelength per color channel; empty uses optics.wavelength everywhere.
  std::vector<double> channel_wavelengths;

  void validate() const;
  double pixel_pitch(int width) const { return field_of_view / width; }  // degrees
};

// Retinal image of one cycle of the sequence with the eye accommodated at
// `accommodation_depth`. Convolution runs on the mirror-extended image so
// mean intensity is preserved for symmetric point-spread functions. Values
// are not clipped.
Image simulate_retinal_image(const BacklightSequence& sequence, double accommodation_depth,
                             const SimulationConfig& config, Execution exec = Execution::parallel);

struct FocalStack {
  std::vector<double> depths;
  std::vector<Image> images;
  std::string sequence_id;
  std::string optics_hash;
};

FocalStack simulate_focal_stack(const BacklightSequence& sequence, std::span<const double> depths,
                                const SimulationConfig& config, Execution exec = Execution::parallel);

// Stable hash of everything in the config that changes simulated pixels.
std::string optics_hash(const SimulationConfig& config);
std::string sequence_id(const BacklightSequence& sequence);

// Spatial-frequency band, cpd.
struct Band {
  double low = 2.0;
  double high = 8.0;
};

// RMS of the band-passed first channel divided by its mean.
double band_limited_contrast(const Image& image, double pixel_pitch_deg, Band band = {});

// Per-pixel version: local RMS of the band-passed image over a (2r+1)^2 box
// divided by the local mean.
Image local_band_contrast(const Image& image, double pixel_pitch_deg, int radius, Band band = {});

}  // namespace tomo
