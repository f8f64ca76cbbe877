#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tomo/error.hpp"
#include "tomo/optics.hpp"

using namespace tomo;
using tomo::test::hopkins_otf;
using tomo::test::shift_for;

TEST(Optics, CutoffFrequency) {
  OpticalConfig o;
  EXPECT_NEAR(o.cutoff_frequency(), 6e-3 / 550e-9 * M_PI / 180.0, 1e-9);
  EXPECT_NEAR(o.cutoff_frequency(), 190.4, 0.05);
  OpticalConfig half = o;
  half.pupil_diameter = 3e-3;
  EXPECT_NEAR(half.cutoff_frequency(), o.cutoff_frequency() / 2.0, 1e-9);
}

TEST(Optics, DiffractionLimitedMatchesAnalyticMtf) {
  OpticalConfig o;
  const Otf otf = diffraction_limited_otf(o);
  const auto f = o.frequencies();
  EXPECT_EQ(otf.values.front(), Complex(1.0, 0.0));
  for (std::size_t k = 0; k < f.size(); ++k) {
    // Circular-pupil MTF: (2/pi)(acos(v) - v sqrt(1 - v^2)), v = f / cutoff.
    const double v = f[k] / o.cutoff_frequency();
    const double analytic = 2.0 / M_PI * (std::acos(v) - v * std::sqrt(1.0 - v * v));
    EXPECT_NEAR(otf.values[k].real(), analytic, 2e-3) << f[k];
    EXPECT_NEAR(otf.values[k].imag(), 0.0, 1e-9);
    if (k > 0) EXPECT_LE(otf.values[k].real(), otf.values[k - 1].real() + 1e-12);
  }
  EXPECT_GT(otf.values.back().real(), 0.9);
}

namespace {

double worst_hopkins_error(double delta, const OpticalConfig& o) {
  const auto f = o.frequencies();
  const Otf otf = defocus_otf(2.0 + delta, 2.0, o);
  const double waves = defocus_opd(delta, o) / o.wavelength;
  double worst = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    worst = std::max(worst, std::abs(otf.values[k] - Complex(hopkins_otf(waves, shift_for(f[k], o)), 0.0)));
  return worst;
}

}  // namespace

TEST(Optics, DefocusMatchesHopkinsQuadrature) {
  OpticalConfig o;
  for (double delta : {0.1, 0.25, 0.5}) EXPECT_LT(worst_hopkins_error(delta, o), 5e-3) << "delta " << delta;
  // 8 waves of defocus needs the finer pupil grid for the same tolerance.
  o.pupil_grid = 512;
  EXPECT_LT(worst_hopkins_error(1.0, o), 5e-3);
}

TEST(Optics, DefocusErrorShrinksWithPupilGrid) {
  OpticalConfig coarse;
  coarse.pupil_grid = 128;
  OpticalConfig fine;
  const double a = worst_hopkins_error(1.0, coarse);
  const double b = worst_hopkins_error(1.0, fine);
  EXPECT_LT(b, a / 3.0);
}

TEST(Optics, DefocusSignSymmetry) {
  OpticalConfig o = test::fast_optics();
  const Otf plus = defocus_otf(1.4, 1.0, o);
  const Otf minus = defocus_otf(0.6, 1.0, o);
  for (std::size_t k = 0; k < plus.values.size(); ++k)
    EXPECT_NEAR(std::abs(plus.values[k]), std::abs(minus.values[k]), 1e-12);
}

TEST(Optics, ZeroDefocusEqualsDiffractionLimited) {
  OpticalConfig o = test::fast_optics();
  const Otf a = defocus_otf(3.1, 3.1, o);
  const Otf b = diffraction_limited_otf(o);
  for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_EQ(a.values[k], b.values[k]);
  EXPECT_EQ(a.source_depth, 3.1);
  EXPECT_EQ(a.image_depth, 3.1);
}

TEST(Optics, DcIsOneAndModulusBounded) {
  OpticalConfig o = test::fast_optics();
  for (double delta : {0.0, 0.3, 1.7, 4.0}) {
    const Otf otf = defocus_otf(delta, 0.0, o);
    EXPECT_EQ(otf.values.front(), Complex(1.0, 0.0));
    for (const auto& v : otf.values) EXPECT_LE(std::abs(v), 1.0 + 1e-9);
  }
}

TEST(Optics, ContinuousInDefocus) {
  OpticalConfig o;
  for (double delta : {0.2, 1.0, 2.5}) {
    const Otf a = defocus_otf(delta, 0.0, o);
    const Otf b = defocus_otf(delta + 1e-4, 0.0, o);
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double d = std::abs(a.values[k]) - std::abs(b.values[k]);
      s += d * d;
    }
    EXPECT_LT(std::sqrt(s / a.values.size()), 1e-3);
  }
}

TEST(Optics, RadialSymmetryOnGridAxes) {
  OpticalConfig o;
  const OtfSurface s = pupil_otf_surface(0.7, o, {}, o.max_frequency);
  for (int k = 0; k <= s.radius(); ++k) {
    const Complex x = s.sample(k, 0);
    EXPECT_NEAR(std::abs(s.sample(0, k) - x), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(s.sample(-k, 0) - x), 0.0, 1e-6);
    EXPECT_NEAR(std::abs(s.sample(0, -k) - x), 0.0, 1e-6);
  }
}

TEST(Optics, FirstNullAtOneDiopterFollowsDiskOracle) {
  // The wave-optics null of a uniformly defocused disk sits at 1.22 / (delta d)
  // cycles per radian (3.55 cpd at 1 D, 6 mm); the bare geometric 1 / (delta d)
  // estimate is 2.9 cpd.
  OpticalConfig o;
  o.max_frequency = 6.0;
  o.frequency_samples = 601;
  const Otf otf = defocus_otf(1.0, 0.0, o);
  const auto f = o.frequencies();
  double null = -1.0;
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (otf.values[k].real() <= 0.0) {
      const double a = otf.values[k - 1].real();
      const double b = otf.values[k].real();
      null = f[k - 1] + (f[k] - f[k - 1]) * a / (a - b);
      break;
    }
  }
  const double oracle = 1.22 / (1.0 * 6e-3) * M_PI / 180.0;
  ASSERT_GT(null, 0.0);
  EXPECT_NEAR(null, oracle, 0.05 * oracle);
  // Independent check against the Hopkins quadrature null.
  const double waves = defocus_opd(1.0, o) / o.wavelength;
  double lo = 2.0;
  double hi = 5.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (hopkins_otf(waves, shift_for(mid, o)) > 0.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(null, lo, 0.05);
}

TEST(Optics, FieldCurvatureOffset) {
  OpticalConfig o;
  AberrationSpec a;
  a.seidel_field_curvature = 10.0;
  EXPECT_EQ(field_curvature_offset(0.0, a, o), 0.0);
  EXPECT_NEAR(field_curvature_offset(1.0, a, o), 2.0 * 10.0 * 550e-9 / (3e-3 * 3e-3), 1e-12);
  EXPECT_NEAR(field_curvature_offset(1.0, a, o), 1.2222, 1e-4);
  EXPECT_NEAR(field_curvature_offset(1.0, a, o) / field_curvature_offset(0.5, a, o), 4.0, 1e-12);
  EXPECT_EQ(field_curvature_offset(0.8, AberrationSpec{}, o), 0.0);
}

TEST(Optics, DefocusOpdRoundTrip) {
  OpticalConfig o;
  EXPECT_NEAR(defocus_opd(1.0, o), 1.0 * 3e-3 * 3e-3 / 2.0, 1e-18);
  EXPECT_NEAR(defocus_from_opd(defocus_opd(0.37, o), o), 0.37, 1e-12);
}

TEST(Optics, AliasingReportsRequiredGrid) {
  OpticalConfig o;
  o.pupil_grid = 64;
  try {
    defocus_otf(30.0, 0.0, o);
    FAIL() << "expected SamplingError";
  } catch (const SamplingError& e) {
    EXPECT_NE(std::string(e.what()).find("required pupil_grid"), std::string::npos);
  }
}

TEST(Optics, CoarseGridRejected) {
  OpticalConfig o;
  o.pupil_grid = 64;
  o.max_frequency = 2.0;  // step 2.97 cpd > 1 cpd
  EXPECT_THROW(diffraction_limited_otf(o), SamplingError);
}

TEST(Optics, ConfigValidation) {
  OpticalConfig o;
  o.pupil_grid = 65;
  EXPECT_THROW(o.validate(), ConfigurationError);
  o = {};
  o.wavelength = 0.0;
  EXPECT_THROW(o.validate(), ConfigurationError);
}

TEST(OtfBank, DeterministicAndOrderIndependent) {
  OpticalConfig o = test::fast_optics();
  const std::vector<double> planes = {0.0, 0.5, 1.0, 1.5};
  const std::vector<double> layers = {0.25, 0.75, 1.25};
  const OtfBank serial = OtfBank::build(planes, layers, o, {}, Execution::serial);
  const OtfBank parallel = OtfBank::build(planes, layers, o, {}, Execution::parallel);
  // A bank with reversed build order of entries: reuse single-entry banks.
  for (std::size_t i = 0; i < planes.size(); ++i) {
    for (std::size_t j = 0; j < layers.size(); ++j) {
      EXPECT_EQ(serial.at(i, j), parallel.at(i, j));
      const OtfBank single = OtfBank::build({planes[i]}, {layers[j]}, o, {}, Execution::serial);
      EXPECT_EQ(single.at(0, 0), serial.at(i, j));
      EXPECT_EQ(serial.transfer(planes[i], layers[j]), serial.at(i, j));
    }
  }
}

TEST(OtfBank, RejectsUnsortedGrids) {
  EXPECT_THROW(OtfBank::build({1.0, 0.5}, {0.2}, test::fast_optics()), ConfigurationError);
  EXPECT_THROW(OtfBank::build({}, {0.2}, test::fast_optics()), ConfigurationError);
}
