#include <gtest/gtest.h>

#include <cmath>

#include "tomo/error.hpp"
#include "tomo/perception.hpp"

using namespace tomo;

namespace {
std::vector<double> band() { return OpticalConfig{}.frequencies(); }
}  // namespace

TEST(Csf, PeakInsideFourToEightCpd) {
  const auto f = band();
  const auto w = csf_weights(f, {});
  const auto best = std::max_element(w.begin(), w.end()) - w.begin();
  EXPECT_GE(f[best], 4.0);
  EXPECT_LE(f[best], 8.0);
  EXPECT_DOUBLE_EQ(w[best], 1.0);
}

TEST(Csf, PeakOverWideRange) {
  CsfModel m;
  double best_f = 0.0;
  double best = -1.0;
  for (int k = 0; k <= 6000; ++k) {
    const double f = k * 0.01;
    const double v = csf_sensitivity(f, m);
    if (v > best) {
      best = v;
      best_f = f;
    }
  }
  EXPECT_GE(best_f, 4.0);
  EXPECT_LE(best_f, 8.0);
}

TEST(Csf, BandPassShape) {
  const auto f = band();
  const auto w = csf_weights(f, {});
  const double peak = *std::max_element(w.begin(), w.end());
  EXPECT_LT(w.front(), peak);
  EXPECT_LT(w.back(), peak);
  for (double v : w) EXPECT_GE(v, 0.0);
}

TEST(Csf, RegressionConstantAtTenCpd) {
  // Independent evaluation of (f/6) exp(1 - f/6) normalized over the grid.
  const auto f = band();
  auto v = [](double x) { return x / 6.0 * std::exp(1.0 - x / 6.0); };
  double peak = 0.0;
  for (double x : f) peak = std::max(peak, v(x));
  const double expected = v(10.0) / peak;
  EXPECT_NEAR(csf_weight(10.0, {}, f), expected, 1e-14);
  EXPECT_NEAR(csf_weight(10.0, {}, f), 0.8557071338702399, 1e-12);
}

TEST(Csf, NegativeFrequencyIsDomainError) {
  EXPECT_THROW(csf_sensitivity(-0.1, {}), DomainError);
  const auto f = band();
  EXPECT_THROW(csf_weight(-1.0, {}, f), DomainError);
}

TEST(Csf, InvalidModel) {
  CsfModel m;
  m.peak_frequency = 0.0;
  EXPECT_THROW(m.validate(), ConfigurationError);
}

TEST(SpectralDistance, HandExample) {
  const std::vector<Complex> a = {1.0, 0.5};
  const std::vector<Complex> b = {1.0, 0.3};
  const std::vector<double> w = {1.0, 1.0};
  EXPECT_NEAR(weighted_spectral_distance(a, b, w), 0.04, 1e-15);
}

TEST(SpectralDistance, PseudometricAndScaling) {
  const std::vector<Complex> a = {{1.0, 0.0}, {0.2, -0.3}, {0.1, 0.4}};
  const std::vector<Complex> b = {{1.0, 0.0}, {-0.2, 0.1}, {0.3, 0.0}};
  const std::vector<double> w = {0.1, 0.7, 1.0};
  EXPECT_EQ(weighted_spectral_distance(a, a, w), 0.0);
  EXPECT_GT(weighted_spectral_distance(a, b, w), 0.0);
  EXPECT_DOUBLE_EQ(weighted_spectral_distance(a, b, w), weighted_spectral_distance(b, a, w));
  std::vector<double> w3 = w;
  for (double& x : w3) x *= 3.0;
  EXPECT_NEAR(weighted_spectral_distance(a, b, w3), 3.0 * weighted_spectral_distance(a, b, w), 1e-15);
}

TEST(SpectralDistance, MagnitudeModeIgnoresPhase) {
  const std::vector<Complex> a = {{1.0, 0.0}, {0.5, 0.0}};
  const std::vector<Complex> b = {{1.0, 0.0}, {-0.5, 0.0}};
  const std::vector<double> w = {1.0, 1.0};
  EXPECT_NEAR(weighted_spectral_distance(a, b, w), 1.0, 1e-15);
  EXPECT_EQ(weighted_spectral_distance(a, b, w, SpectrumMode::magnitude), 0.0);
}

TEST(SpectralDistance, GridMismatch) {
  const std::vector<Complex> a = {1.0, 0.5};
  const std::vector<Complex> b = {1.0};
  const std::vector<double> w = {1.0, 1.0};
  EXPECT_THROW(weighted_spectral_distance(a, b, w), ShapeError);
}
