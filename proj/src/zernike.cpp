#include "tomo/zernike.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "tomo/error.hpp"

namespace tomo {
namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double radial(int n, int m_abs, double rho) {
  double sum = 0.0;
  for (int s = 0; s <= (n - m_abs) / 2; ++s) {
    const double c = factorial(n - s) /
                     (factorial(s) * factorial((n + m_abs) / 2 - s) * factorial((n - m_abs) / 2 - s));
    sum += ((s % 2) ? -c : c) * std::pow(rho, n - 2 * s);
  }
  return sum;
}

}  // namespace

ZernikeMode ansi_mode(int index) {
  const int max_index = (kMaxZernikeOrder * (kMaxZernikeOrder + 2) + kMaxZernikeOrder) / 2;
  if (index < 0 || index > max_index)
    throw UnsupportedTermError("unsupported Zernike index " + std::to_string(index) +
                               " (supported: 0.." + std::to_string(max_index) + ")");
  const int n = static_cast<int>(std::ceil((-3.0 + std::sqrt(9.0 + 8.0 * index)) / 2.0));
  return {n, 2 * index - n * (n + 2)};
}

double zernike(int index, double rho, double theta) {
  const auto [n, m] = ansi_mode(index);
  const int m_abs = std::abs(m);
  const double norm = std::sqrt((m == 0 ? 1.0 : 2.0) * (n + 1));
  const double r = radial(n, m_abs, rho);
  if (m > 0) return norm * r * std::cos(m * theta);
  if (m < 0) return norm * r * std::sin(m_abs * theta);
  return norm * r;
}

PhaseMap zernike_phase(std::span<const ZernikeTerm> coefficients, const OpticalConfig& config) {
  config.validate();
  for (const auto& term : coefficients) {
    ansi_mode(term.index);
    if (!std::isfinite(term.waves)) throw DomainError("non-finite Zernike coefficient");
  }
  const int size = config.pupil_grid;
  PhaseMap map;
  map.size = size;
  map.waves.assign(static_cast<std::size_t>(size) * size, 0.0);
  map.inside.assign(map.waves.size(), 0);
  const double step = 2.0 / size;
  for (int row = 0; row < size; ++row) {
    const double v = -1.0 + (row + 0.5) * step;
    for (int col = 0; col < size; ++col) {
      const double u = -1.0 + (col + 0.5) * step;
      const double rho = std::hypot(u, v);
      if (rho > 1.0) continue;
      const std::size_t idx = static_cast<std::size_t>(row) * size + col;
      map.inside[idx] = 1;
      const double theta = std::atan2(v, u);
      double w = 0.0;
      for (const auto& term : coefficients) w += term.waves * zernike(term.index, rho, theta);
      map.waves[idx] = w;
    }
  }
  return map;
}

std::vector<ZernikeTerm> parse_zernike_table(std::istream& in) {
  std::vector<ZernikeTerm> terms;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    ZernikeTerm term;
    if (!(fields >> term.index) || !(fields >> term.waves) || !std::isfinite(term.waves))
      throw ConfigurationError("zernike table line " + std::to_string(line_no) + ": expected '<index> <waves>'");
    ansi_mode(term.index);
    terms.push_back(term);
  }
  return terms;
}

}  // namespace tomo
