#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "tomo/layers.hpp"
#include "tomo/optics.hpp"
#include "tomo/render.hpp"
#include "tomo/strategy.hpp"

namespace tomo::test {

// Smaller pupil grid where only relative behavior matters.
inline OpticalConfig fast_optics() {
  OpticalConfig o;
  o.pupil_grid = 128;
  return o;
}

inline std::shared_ptr<const OtfBank> make_bank(int layers, int planes, const OpticalConfig& optics = {},
                                                double lo = 0.0, double hi = 5.5) {
  LayerGrid grid{layers, lo, hi};
  return std::make_shared<const OtfBank>(
      OtfBank::build(accommodation_planes(lo, hi, planes), grid.depths(), optics));
}

inline StrategyTable unit_table(const std::vector<double>& layers) {
  StrategyTable t;
  t.layer_depths = layers;
  for (std::size_t k = 0; k < layers.size(); ++k)
    t.entries.push_back({layers[k], IlluminationStrategy::unit(layers.size(), k), 0.0});
  return t;
}

inline Image noise_image(int w, int h, int channels, std::uint32_t seed, double lo = 0.1, double hi = 0.9) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h, channels);
  for (double& v : img.data) v = u(rng);
  return img;
}

inline double rms_difference(const Image& a, const Image& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) s += (a.data[k] - b.data[k]) * (a.data[k] - b.data[k]);
  return std::sqrt(s / a.data.size());
}

// Incoherent OTF of a circular pupil with pure defocus, by one-dimensional
// quadrature over the pupil overlap (Hopkins). `waves` is W20 in waves and
// `shift` the pupil shift in units of the pupil radius.
inline double hopkins_otf(double waves, double shift) {
  if (shift >= 2.0) return 0.0;
  const double half = shift / 2.0;
  const double upper = 1.0 - half;
  const int steps = 20000;
  const double h = upper / steps;
  double sum = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double x = k * h;
    const double chord = 1.0 - (x + half) * (x + half);
    const double f = std::cos(4.0 * M_PI * waves * shift * x) * std::sqrt(std::max(chord, 0.0));
    sum += f * (k == 0 || k == steps ? 1.0 : (k % 2 ? 4.0 : 2.0));
  }
  return 4.0 / M_PI * sum * h / 3.0;
}

// Pupil shift (radii) for a frequency in cpd.
inline double shift_for(double cpd, const OpticalConfig& o) {
  return cpd * 180.0 / M_PI * o.wavelength / (o.pupil_diameter / 2.0);
}

}  // namespace tomo::test
