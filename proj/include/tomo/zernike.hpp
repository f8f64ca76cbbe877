#pragma once

#include <istream>
#include <span>
#include <vector>

#include "tomo/optics.hpp"

namespace tomo {

inline constexpr int kMaxZernikeOrder = 10;

struct ZernikeMode {
  int n = 0;  // radial order
  int m = 0;  // signed azimuthal frequency
};

// ANSI/OSA index -> (n, m). Indices above radial order kMaxZernikeOrder raise
// UnsupportedTermError.
ZernikeMode ansi_mode(int index);

// Orthonormal Zernike polynomial on the unit disk (RMS 1 over the pupil).
double zernike(int index, double rho, double theta);

// Wavefront over the pupil grid, in waves; samples outside the unit disk are 0
// and flagged in `inside`.
struct PhaseMap {
  int size = 0;
  std::vector<double> waves;
  std::vector<unsigned char> inside;

  double at(int row, int col) const { return waves[static_cast<std::size_t>(row) * size + col]; }
};

PhaseMap zernike_phase(std::span<const ZernikeTerm> coefficients, const OpticalConfig& config);

// Plain-text preset: one "index waves" pair per line; '#' starts a comment.
std::vector<ZernikeTerm> parse_zernike_table(std::istream& in);

}  // namespace tomo
