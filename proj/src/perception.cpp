#include "tomo/perception.hpp"

#include <algorithm>
#include <cmath>

#include "tomo/error.hpp"

namespace tomo {

void CsfModel::validate() const {
  if (!(peak_frequency > 0) || !(peak_sensitivity > 0) || !(low_frequency_exponent > 0) ||
      !(high_frequency_decay > 0))
    throw ConfigurationError("CSF parameters must all be > 0");
}

double csf_sensitivity(double f_cpd, const CsfModel& model) {
  if (!(f_cpd >= 0.0)) throw DomainError("CSF frequency must be >= 0");
  model.validate();
  if (f_cpd == 0.0) return 0.0;
  const double x = f_cpd / model.peak_frequency;
  const double a = model.low_frequency_exponent;
  const double b = model.high_frequency_decay;
  return model.peak_sensitivity * std::pow(x, a) * std::exp((a / b) * (1.0 - std::pow(x, b)));
}

std::vector<double> csf_weights(std::span<const double> band, const CsfModel& model) {
  std::vector<double> w(band.size());
  double peak = 0.0;
  for (std::size_t k = 0; k < band.size(); ++k) {
    w[k] = csf_sensitivity(band[k], model);
    peak = std::max(peak, w[k]);
  }
  if (!(peak > 0.0)) throw DomainError("CSF vanishes on the whole band");
  for (auto& v : w) v /= peak;
  return w;
}

double csf_weight(double f_cpd, const CsfModel& model, std::span<const double> band) {
  double peak = 0.0;
  for (double f : band) peak = std::max(peak, csf_sensitivity(f, model));
  if (!(peak > 0.0)) throw DomainError("CSF vanishes on the whole band");
  return csf_sensitivity(f_cpd, model) / peak;
}

double weighted_spectral_distance(std::span<const Complex> target, std::span<const Complex> reconstructed,
                                  std::span<const double> weights, SpectrumMode mode) {
  if (target.size() != reconstructed.size() || target.size() != weights.size())
    throw ShapeError("spectra and weights must share one frequency grid");
  double sum = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    double d2;
    if (mode == SpectrumMode::complex) {
      d2 = std::norm(target[k] - reconstructed[k]);
    } else {
      const double d = std::abs(target[k]) - std::abs(reconstructed[k]);
      d2 = d * d;
    }
    sum += weights[k] * d2;
  }
  return sum;
}

}  // namespace tomo
