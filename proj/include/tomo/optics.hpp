#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tomo/execution.hpp"

namespace tomo {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846;
// 1 cycle/degree = 180/pi cycles/radian.
inline constexpr double kCyclesPerRadianPerCpd = 180.0 / kPi;

struct OpticalConfig {
  double wavelength = 550e-9;    // meters
  double pupil_diameter = 6e-3;  // meters
  int pupil_grid = 256;          // pupil samples across the diameter
  double max_frequency = 10.0;   // cpd, upper end of the analysis band
  int frequency_samples = 64;    // samples on [0, max_frequency]

  void validate() const;
  std::vector<double> frequencies() const;
  // Incoherent cutoff d/lambda expressed in cpd.
  double cutoff_frequency() const;
  // Frequency step of the pupil autocorrelation grid, in cpd.
  double native_spacing() const;
};

struct ZernikeTerm {
  int index = 0;       // ANSI/OSA single index
  double waves = 0.0;  // orthonormal coefficient in waves
};

struct AberrationSpec {
  std::vector<ZernikeTerm> zernike;
  double seidel_field_curvature = 0.0;  // W220, waves at full field

  bool zernike_free() const;
  void validate() const;
};

// One-dimensional transfer function sampled along +fx on the analysis band.
struct Otf {
  Spectrum values;
  double source_depth = 0.0;  // accommodation plane, diopters
  double image_depth = 0.0;   // layer / object depth, diopters
};

// Two-dimensional OTF sampled on the pupil autocorrelation grid, cropped to a
// square of half-width `radius` samples around DC.
class OtfSurface {
 public:
  OtfSurface(int radius, double spacing_cpd, std::vector<Complex> values);

  int radius() const { return radius_; }
  double spacing() const { return spacing_; }
  double extent() const { return radius_ * spacing_; }
  Complex sample(int kx, int ky) const;
  // Bilinear interpolation; zero outside the stored square.
  Complex at(double fx_cpd, double fy_cpd) const;
  Spectrum profile(std::span<const double> frequencies_cpd) const;

 private:
  int radius_;
  double spacing_;
  std::vector<Complex> values_;
};

// Pupil-edge defocus OPD W20 = delta * (d/2)^2 / 2, meters.
double defocus_opd(double delta_diopters, const OpticalConfig& config);
double defocus_from_opd(double opd_meters, const OpticalConfig& config);

// Defocus is resolved to 1e-9 D so that transfer functions are a pure function
// of a discrete key; every OTF routine goes through this rounding.
std::int64_t defocus_key(double delta_diopters);
double defocus_from_key(std::int64_t key);

// DC-normalized autocorrelation of the generalized pupil (circular aperture
// with quadratic defocus phase plus Zernike phase). Throws SamplingError when
// the autocorrelation integrand aliases on the pupil grid up to `keep_cpd`.
OtfSurface pupil_otf_surface(double delta_diopters, const OpticalConfig& config,
                             const AberrationSpec& aberrations, double keep_cpd);

Otf diffraction_limited_otf(const OpticalConfig& config);
Otf defocus_otf(double source_depth, double image_depth, const OpticalConfig& config,
                const AberrationSpec& aberrations = {});

// Signed dioptric shift of the image surface at a normalized field position
// caused by Seidel field curvature (W220 r^2 inverted through the W20 relation).
double field_curvature_offset(double field_fraction, const AberrationSpec& aberrations,
                              const OpticalConfig& config);

// Immutable table of transfer functions H(z_s[i], z_t[j]).
class OtfBank {
 public:
  static OtfBank build(std::vector<double> accommodation_depths, std::vector<double> layer_depths,
                       const OpticalConfig& config, const AberrationSpec& aberrations = {},
                       Execution exec = Execution::parallel);

  std::size_t planes() const { return accommodation_.size(); }
  std::size_t layers() const { return layers_.size(); }
  std::size_t samples() const { return frequencies_.size(); }

  const Spectrum& at(std::size_t plane, std::size_t layer) const {
    return table_[plane * layers_.size() + layer];
  }
  Otf otf(std::size_t plane, std::size_t layer) const;
  // H(z_s, z_img) for arbitrary depths, computed by the same route as the table.
  Spectrum transfer(double source_depth, double image_depth) const;

  std::span<const double> accommodation_depths() const { return accommodation_; }
  std::span<const double> layer_depths() const { return layers_; }
  std::span<const double> frequencies() const { return frequencies_; }
  const OpticalConfig& optics() const { return config_; }
  const AberrationSpec& aberrations() const { return aberrations_; }

 private:
  OtfBank() = default;

  std::vector<double> accommodation_;
  std::vector<double> layers_;
  std::vector<double> frequencies_;
  OpticalConfig config_;
  AberrationSpec aberrations_;
  std::vector<Spectrum> table_;
};

}  // namespace tomo
