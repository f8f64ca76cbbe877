#pragma once

#include <memory>
#include <span>
#include <vector>

#include "tomo/execution.hpp"
#include "tomo/strategy.hpp"

namespace tomo {

// Target-independent Gram matrix of the layer transfer functions,
//   G[j][k] = sum_i sum_f V(f) Re(conj(H_ij) H_ik).
struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;    // n x n, row-major
  std::vector<double> row_sums;  // G 1
  double total = 0.0;            // 1' G 1

  static GramMatrix build(const OtfBank& bank, std::span<const double> weights,
                          Execution exec = Execution::parallel);
  double operator()(std::size_t j, std::size_t k) const { return values[j * n + k]; }
};

// The complex-mode fidelity term is a quadratic form in w = b + c:
//   J = t - 2 (w.r)/A + (w'Gw)/A^2,
// with r_j = sum_i sum_f V Re(conj(T_i) H_ij) and t = sum_i sum_f V |T_i|^2.
// Evaluation costs O(lit^2) instead of O(m n F).
class QuadraticCostModel {
 public:
  QuadraticCostModel(std::shared_ptr<const GramMatrix> gram, const OtfBank& bank,
                     std::span<const Spectrum> target, std::span<const double> weights, double dc_noise);

  double fidelity(const IlluminationStrategy& strategy) const;

 private:
  std::shared_ptr<const GramMatrix> gram_;
  std::vector<double> cross_;  // r
  double cross_sum_ = 0.0;
  double target_energy_ = 0.0;
  double dc_noise_ = 0.0;
};

// Total cost (fidelity + penalty) of each individual; uses the quadratic model
// when the problem carries one, the direct formula otherwise.
double fast_cost(const IlluminationStrategy& strategy, const StrategyProblem& problem);
std::vector<double> evaluate_population(const StrategyProblem& problem,
                                        std::span<const IlluminationStrategy> population,
                                        Execution exec = Execution::parallel);

}  // namespace tomo
