#include "tomo/optics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "fft.hpp"
#include "parallel.hpp"
#include "tomo/error.hpp"
#include "tomo/layers.hpp"
#include "tomo/zernike.hpp"

namespace tomo {

void OpticalConfig::validate() const {
  if (!(wavelength > 0) || !std::isfinite(wavelength)) throw ConfigurationError("wavelength must be > 0");
  if (!(pupil_diameter > 0) || !std::isfinite(pupil_diameter))
    throw ConfigurationError("pupil diameter must be > 0");
  if (pupil_grid < 64 || pupil_grid % 2 != 0) throw ConfigurationError("pupil grid must be even and >= 64");
  if (!(max_frequency > 0) || !std::isfinite(max_frequency))
    throw ConfigurationError("max frequency must be > 0");
  if (frequency_samples < 2) throw ConfigurationError("need at least 2 frequency samples");
}

std::vector<double> OpticalConfig::frequencies() const {
  std::vector<double> f(frequency_samples);
  for (int k = 0; k < frequency_samples; ++k) f[k] = k * max_frequency / (frequency_samples - 1);
  return f;
}

double OpticalConfig::cutoff_frequency() const {
  return pupil_diameter / wavelength / kCyclesPerRadianPerCpd;
}

double OpticalConfig::native_spacing() const {
  return (pupil_diameter / pupil_grid) / wavelength / kCyclesPerRadianPerCpd;
}

bool AberrationSpec::zernike_free() const {
  return std::all_of(zernike.begin(), zernike.end(), [](const ZernikeTerm& t) { return t.waves == 0.0; });
}

void AberrationSpec::validate() const {
  for (const auto& t : zernike) {
    ansi_mode(t.index);
    if (!std::isfinite(t.waves)) throw DomainError("non-finite Zernike coefficient");
  }
  if (!std::isfinite(seidel_field_curvature)) throw DomainError("non-finite field curvature coefficient");
}

OtfSurface::OtfSurface(int radius, double spacing_cpd, std::vector<Complex> values)
    : radius_(radius), spacing_(spacing_cpd), values_(std::move(values)) {
  const auto side = static_cast<std::size_t>(2 * radius_ + 1);
  if (values_.size() != side * side) throw ShapeError("OTF surface size mismatch");
}

Complex OtfSurface::sample(int kx, int ky) const {
  if (std::abs(kx) > radius_ || std::abs(ky) > radius_) return {0.0, 0.0};
  const int side = 2 * radius_ + 1;
  return values_[static_cast<std::size_t>(ky + radius_) * side + (kx + radius_)];
}

Complex OtfSurface::at(double fx_cpd, double fy_cpd) const {
  const double gx = fx_cpd / spacing_;
  const double gy = fy_cpd / spacing_;
  const double x0 = std::floor(gx);
  const double y0 = std::floor(gy);
  const double tx = gx - x0;
  const double ty = gy - y0;
  const int ix = static_cast<int>(x0);
  const int iy = static_cast<int>(y0);
  if (ix < -radius_ || iy < -radius_ || ix > radius_ || iy > radius_) return {0.0, 0.0};
  Complex top = sample(ix, iy) * (1.0 - tx);
  if (tx != 0.0) top += sample(ix + 1, iy) * tx;
  if (ty == 0.0) return top;
  Complex bottom = sample(ix, iy + 1) * (1.0 - tx);
  if (tx != 0.0) bottom += sample(ix + 1, iy + 1) * tx;
  return top * (1.0 - ty) + bottom * ty;
}

Spectrum OtfSurface::profile(std::span<const double> frequencies_cpd) const {
  Spectrum out(frequencies_cpd.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(frequencies_cpd[k], 0.0);
  return out;
}

double defocus_opd(double delta_diopters, const OpticalConfig& config) {
  const double r = config.pupil_diameter / 2.0;
  return delta_diopters * r * r / 2.0;
}

double defocus_from_opd(double opd_meters, const OpticalConfig& config) {
  const double r = config.pupil_diameter / 2.0;
  return 2.0 * opd_meters / (r * r);
}

std::int64_t defocus_key(double delta_diopters) {
  if (!std::isfinite(delta_diopters)) throw DomainError("non-finite defocus");
  return std::llround(delta_diopters * 1e9);
}

double defocus_from_key(std::int64_t key) { return static_cast<double>(key) / 1e9; }

namespace {

// Largest per-sample change, in waves, of the autocorrelation integrand phase
// phi(u) - phi(u - s) for shifts of length `shift` (normalized pupil units)
// along x, y and the diagonal.
double integrand_phase_step(const std::vector<double>& phase, const std::vector<unsigned char>& inside,
                            int size, double shift) {
  const double step = 2.0 / size;
  const double s_samples = shift / step;
  const double diag = s_samples / std::sqrt(2.0);
  const double directions[3][2] = {{s_samples, 0.0}, {0.0, s_samples}, {diag, diag}};

  auto sample_phase = [&](double row, double col, double& out) {
    // Bilinear lookup restricted to fully-inside neighbourhoods.
    const int r0 = static_cast<int>(std::floor(row));
    const int c0 = static_cast<int>(std::floor(col));
    if (r0 < 0 || c0 < 0 || r0 + 1 >= size || c0 + 1 >= size) return false;
    const double tr = row - r0;
    const double tc = col - c0;
    double acc = 0.0;
    for (int dr = 0; dr <= 1; ++dr) {
      for (int dc = 0; dc <= 1; ++dc) {
        const std::size_t idx = static_cast<std::size_t>(r0 + dr) * size + (c0 + dc);
        if (!inside[idx]) return false;
        acc += phase[idx] * (dr ? tr : 1.0 - tr) * (dc ? tc : 1.0 - tc);
      }
    }
    out = acc;
    return true;
  };

  double worst = 0.0;
  std::vector<double> psi(static_cast<std::size_t>(size) * size);
  std::vector<unsigned char> valid(psi.size());
  for (const auto& d : directions) {
    for (int row = 0; row < size; ++row) {
      for (int col = 0; col < size; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * size + col;
        double shifted = 0.0;
        valid[idx] = inside[idx] && sample_phase(row - d[1], col - d[0], shifted);
        psi[idx] = valid[idx] ? phase[idx] - shifted : 0.0;
      }
    }
    for (int row = 0; row < size; ++row) {
      for (int col = 0; col < size; ++col) {
        const std::size_t idx = static_cast<std::size_t>(row) * size + col;
        if (!valid[idx]) continue;
        if (col + 1 < size && valid[idx + 1]) worst = std::max(worst, std::abs(psi[idx + 1] - psi[idx]));
        if (row + 1 < size && valid[idx + size]) worst = std::max(worst, std::abs(psi[idx + size] - psi[idx]));
      }
    }
  }
  return worst;
}

}  // namespace

OtfSurface pupil_otf_surface(double delta_diopters, const OpticalConfig& config,
                             const AberrationSpec& aberrations, double keep_cpd) {
  config.validate();
  aberrations.validate();
  const double spacing = config.native_spacing();
  if (spacing > config.max_frequency / 2.0)
    throw SamplingError("pupil grid " + std::to_string(config.pupil_grid) + " too coarse: frequency step " +
                        std::to_string(spacing) + " cpd cannot resolve the 0-" +
                        std::to_string(config.max_frequency) + " cpd band");
  const double delta = defocus_from_key(defocus_key(delta_diopters));
  const int n = config.pupil_grid;
  const int padded = 2 * n;

  PhaseMap map = zernike_phase(aberrations.zernike, config);
  const double w20_waves = defocus_opd(delta, config) / config.wavelength;
  const double step = 2.0 / n;
  for (int row = 0; row < n; ++row) {
    const double v = -1.0 + (row + 0.5) * step;
    for (int col = 0; col < n; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * n + col;
      if (!map.inside[idx]) continue;
      const double u = -1.0 + (col + 0.5) * step;
      map.waves[idx] += w20_waves * (u * u + v * v);
    }
  }

  keep_cpd = std::max(keep_cpd, config.max_frequency);
  if (delta != 0.0 || !aberrations.zernike_free()) {
    const double shift_m = keep_cpd * kCyclesPerRadianPerCpd * config.wavelength;
    const double shift_norm = shift_m / (config.pupil_diameter / 2.0);
    if (shift_norm < 2.0) {
      const double worst = integrand_phase_step(map.waves, map.inside, n, shift_norm);
      if (worst > 0.5) {
        int required = static_cast<int>(std::ceil(n * worst / 0.5));
        required += required % 2;
        throw SamplingError("defocus " + std::to_string(delta) + " D aliases on pupil grid " +
                            std::to_string(n) + " up to " + std::to_string(keep_cpd) +
                            " cpd; required pupil_grid >= " + std::to_string(required));
      }
    }
  }

  auto buffer = detail::alloc_complex(static_cast<std::size_t>(padded) * padded);
  std::fill_n(&buffer[0][0], 2 * static_cast<std::size_t>(padded) * padded, 0.0);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const std::size_t idx = static_cast<std::size_t>(row) * n + col;
      if (!map.inside[idx]) continue;
      const double angle = 2.0 * kPi * map.waves[idx];
      auto& cell = buffer[static_cast<std::size_t>(row) * padded + col];
      cell[0] = std::cos(angle);
      cell[1] = std::sin(angle);
    }
  }
  {
    auto forward = detail::FftPlan::complex_2d(padded, padded, buffer.get(), FFTW_FORWARD);
    forward.execute();
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(padded) * padded; ++k) {
    buffer[k][0] = buffer[k][0] * buffer[k][0] + buffer[k][1] * buffer[k][1];
    buffer[k][1] = 0.0;
  }
  {
    auto backward = detail::FftPlan::complex_2d(padded, padded, buffer.get(), FFTW_BACKWARD);
    backward.execute();
  }

  const int radius = std::min(n - 1, static_cast<int>(std::ceil(keep_cpd / spacing)) + 1);
  const int side = 2 * radius + 1;
  const double dc = buffer[0][0];
  std::vector<Complex> values(static_cast<std::size_t>(side) * side);
  for (int ky = -radius; ky <= radius; ++ky) {
    const int row = (ky + padded) % padded;
    for (int kx = -radius; kx <= radius; ++kx) {
      const int col = (kx + padded) % padded;
      const auto& cell = buffer[static_cast<std::size_t>(row) * padded + col];
      values[static_cast<std::size_t>(ky + radius) * side + (kx + radius)] = {cell[0] / dc, cell[1] / dc};
    }
  }
  values[static_cast<std::size_t>(radius) * side + radius] = {1.0, 0.0};
  return OtfSurface(radius, spacing, std::move(values));
}

Otf diffraction_limited_otf(const OpticalConfig& config) {
  const auto freqs = config.frequencies();
  return {pupil_otf_surface(0.0, config, {}, config.max_frequency).profile(freqs), 0.0, 0.0};
}

Otf defocus_otf(double source_depth, double image_depth, const OpticalConfig& config,
                const AberrationSpec& aberrations) {
  if (!std::isfinite(source_depth) || !std::isfinite(image_depth)) throw DomainError("non-finite depth");
  const auto freqs = config.frequencies();
  auto surface = pupil_otf_surface(source_depth - image_depth, config, aberrations, config.max_frequency);
  return {surface.profile(freqs), source_depth, image_depth};
}

double field_curvature_offset(double field_fraction, const AberrationSpec& aberrations,
                              const OpticalConfig& config) {
  if (!(field_fraction >= 0.0) || !std::isfinite(field_fraction))
    throw DomainError("field fraction must be finite and >= 0");
  const double opd = aberrations.seidel_field_curvature * config.wavelength * field_fraction * field_fraction;
  return defocus_from_opd(opd, config);
}

OtfBank OtfBank::build(std::vector<double> accommodation_depths, std::vector<double> layer_depths,
                       const OpticalConfig& config, const AberrationSpec& aberrations, Execution exec) {
  config.validate();
  aberrations.validate();
  if (accommodation_depths.empty() || layer_depths.empty()) throw ConfigurationError("empty depth grid");
  if (!strictly_increasing(accommodation_depths) || !strictly_increasing(layer_depths))
    throw ConfigurationError("depth grids must be strictly increasing");

  OtfBank bank;
  bank.accommodation_ = std::move(accommodation_depths);
  bank.layers_ = std::move(layer_depths);
  bank.config_ = config;
  bank.aberrations_ = aberrations;
  bank.frequencies_ = config.frequencies();

  const std::size_t m = bank.accommodation_.size();
  const std::size_t n = bank.layers_.size();
  std::vector<std::int64_t> keys(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) keys[i * n + j] = defocus_key(bank.accommodation_[i] - bank.layers_[j]);

  std::vector<std::int64_t> unique = keys;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  std::vector<Spectrum> profiles(unique.size());
  detail::for_each_index(static_cast<std::ptrdiff_t>(unique.size()), exec, [&](std::ptrdiff_t u) {
    profiles[u] = pupil_otf_surface(defocus_from_key(unique[u]), config, aberrations, config.max_frequency)
                      .profile(bank.frequencies_);
  });

  bank.table_.resize(m * n);
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const auto pos = std::lower_bound(unique.begin(), unique.end(), keys[k]) - unique.begin();
    bank.table_[k] = profiles[pos];
  }
  return bank;
}

Otf OtfBank::otf(std::size_t plane, std::size_t layer) const {
  return {at(plane, layer), accommodation_.at(plane), layers_.at(layer)};
}

Spectrum OtfBank::transfer(double source_depth, double image_depth) const {
  return defocus_otf(source_depth, image_depth, config_, aberrations_).values;
}

}  // namespace tomo
