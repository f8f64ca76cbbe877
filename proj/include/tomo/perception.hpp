#pragma once

#include <span>
#include <vector>

#include "tomo/optics.hpp"

namespace tomo {

// Band-pass contrast sensitivity
//   V(f) = S * (f/fp)^a * exp((a/b) * (1 - (f/fp)^b))
// which peaks at fp with value S. `a` sets the low-frequency attenuation and
// `b` the sharpness of the high-frequency exponential decay.
struct CsfModel {
  double peak_frequency = 6.0;  // cpd
  double peak_sensitivity = 1.0;
  double low_frequency_exponent = 1.0;
  double high_frequency_decay = 1.0;

  void validate() const;
};

// Whether spectra are compared as complex values or by modulus only.
enum class SpectrumMode { complex, magnitude };

// Unnormalized sensitivity; throws DomainError for f < 0.
double csf_sensitivity(double f_cpd, const CsfModel& model);

// Sensitivity normalized so the maximum over `band` equals 1.
double csf_weight(double f_cpd, const CsfModel& model, std::span<const double> band);
std::vector<double> csf_weights(std::span<const double> band, const CsfModel& model);

// sum_f V(f) |target(f) - reconstructed(f)|^2, or with moduli in magnitude mode.
double weighted_spectral_distance(std::span<const Complex> target, std::span<const Complex> reconstructed,
                                  std::span<const double> weights,
                                  SpectrumMode mode = SpectrumMode::complex);

}  // namespace tomo
