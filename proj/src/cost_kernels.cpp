#include "tomo/cost_kernels.hpp"

#include <algorithm>

#include "parallel.hpp"
#include "tomo/error.hpp"

namespace tomo {

GramMatrix GramMatrix::build(const OtfBank& bank, std::span<const double> weights, Execution exec) {
  const std::size_t n = bank.layers();
  const std::size_t m = bank.planes();
  const std::size_t f = bank.samples();
  if (weights.size() != f) throw ShapeError("weights do not match the bank frequency grid");
  GramMatrix g;
  g.n = n;
  g.values.assign(n * n, 0.0);
  detail::for_each_index(static_cast<std::ptrdiff_t>(n), exec, [&](std::ptrdiff_t j) {
    for (std::size_t k = static_cast<std::size_t>(j); k < n; ++k) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const Spectrum& a = bank.at(i, j);
        const Spectrum& b = bank.at(i, k);
        for (std::size_t q = 0; q < f; ++q) sum += weights[q] * (std::conj(a[q]) * b[q]).real();
      }
      g.values[j * n + k] = sum;
    }
  });
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < j; ++k) g.values[j * n + k] = g.values[k * n + j];
  g.row_sums.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) g.row_sums[j] += g.values[j * n + k];
    g.total += g.row_sums[j];
  }
  return g;
}

QuadraticCostModel::QuadraticCostModel(std::shared_ptr<const GramMatrix> gram, const OtfBank& bank,
                                       std::span<const Spectrum> target, std::span<const double> weights,
                                       double dc_noise)
    : gram_(std::move(gram)), dc_noise_(dc_noise) {
  const std::size_t n = bank.layers();
  const std::size_t m = bank.planes();
  const std::size_t f = bank.samples();
  if (target.size() != m || gram_->n != n) throw ShapeError("quadratic model dimensions mismatch");
  cross_.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Spectrum& h = bank.at(i, j);
      for (std::size_t q = 0; q < f; ++q) sum += weights[q] * (std::conj(target[i][q]) * h[q]).real();
    }
    cross_[j] = sum;
    cross_sum_ += sum;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t q = 0; q < f; ++q) target_energy_ += weights[q] * std::norm(target[i][q]);
}

double QuadraticCostModel::fidelity(const IlluminationStrategy& strategy) const {
  const std::size_t n = gram_->n;
  if (strategy.size() != n) throw ShapeError("strategy length does not match layer count");
  thread_local std::vector<std::size_t> lit;
  lit.clear();
  for (std::size_t j = 0; j < n; ++j)
    if (strategy[j]) lit.push_back(j);
  const double c = dc_noise_;
  const double a = static_cast<double>(lit.size()) + c * static_cast<double>(n);
  if (!(a > 0.0)) throw DegenerateStrategyError("illumination time A = 0 (all bits off, no DC noise)");

  double dot = 0.0;
  double quad = 0.0;
  double edge = 0.0;
  for (std::size_t x = 0; x < lit.size(); ++x) {
    const std::size_t j = lit[x];
    dot += cross_[j];
    edge += gram_->row_sums[j];
    const double* row = &gram_->values[j * n];
    for (std::size_t y = 0; y < lit.size(); ++y) quad += row[lit[y]];
  }
  if (c != 0.0) {
    dot += c * cross_sum_;
    quad += 2.0 * c * edge + c * c * gram_->total;
  }
  const double j_value = target_energy_ - 2.0 * dot / a + quad / (a * a);
  return std::max(0.0, j_value);
}

double fast_cost(const IlluminationStrategy& strategy, const StrategyProblem& problem) {
  if (!problem.model) return cost(strategy, problem).total();
  const double a = strategy.illumination_time(problem.dc_noise);
  const double shortfall = std::max(static_cast<double>(problem.brightness_bound) - a, 0.0);
  return problem.model->fidelity(strategy) + problem.gamma * shortfall;
}

std::vector<double> evaluate_population(const StrategyProblem& problem,
                                        std::span<const IlluminationStrategy> population, Execution exec) {
  std::vector<double> out(population.size());
  detail::for_each_index(static_cast<std::ptrdiff_t>(population.size()), exec,
                         [&](std::ptrdiff_t k) { out[k] = fast_cost(population[k], problem); });
  return out;
}

}  // namespace tomo
