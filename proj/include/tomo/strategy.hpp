#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tomo/execution.hpp"
#include "tomo/optics.hpp"
#include "tomo/perception.hpp"

namespace tomo {

// Binary on/off pattern over the n tomographic layers for one target depth.
class IlluminationStrategy {
 public:
  IlluminationStrategy() = default;
  explicit IlluminationStrategy(std::vector<std::uint8_t> bits);

  static IlluminationStrategy unit(std::size_t n, std::size_t k);
  static IlluminationStrategy all_on(std::size_t n);
  // "0110..." with one character per layer.
  static IlluminationStrategy parse(std::string_view text);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t j) const { return bits_[j] != 0; }
  void set(std::size_t j, bool on) { bits_[j] = on ? 1 : 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  int lit_count() const;
  // A = sum_j (b_j + c).
  double illumination_time(double dc_noise) const { return lit_count() + dc_noise * static_cast<double>(size()); }
  std::string to_string() const;
  int hamming(const IlluminationStrategy& other) const;

  auto operator<=>(const IlluminationStrategy&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct CostBreakdown {
  double fidelity = 0.0;
  double penalty = 0.0;
  double total() const { return fidelity + penalty; }
};

// How the brightness penalty weight gamma is chosen per target depth.
//  bound:     2 * (upper bound on the fidelity term), so a single missing
//             subframe below A_low always costs more than any fidelity gain.
//  primitive: gamma = fidelity term of the primitive strategy.
//  fixed:     the given value.
enum class GammaMode { bound, primitive, fixed };

struct PenaltySpec {
  GammaMode mode = GammaMode::bound;
  double value = 0.0;
};

// A_low from a fraction of the layer count: 0 stays 0, otherwise rounded to the
// nearest subframe count with a minimum of 1.
int brightness_bound_from_fraction(double fraction, int layer_count);

class QuadraticCostModel;
struct GramMatrix;

// One fully specified instance of the per-target-depth problem.
struct StrategyProblem {
  std::shared_ptr<const OtfBank> bank;
  double target_depth = 0.0;
  std::vector<Spectrum> target;  // H(z_s[i], z_d), one per accommodation plane
  std::vector<double> weights;   // V(f) on the bank's frequency grid
  double dc_noise = 0.0;
  int brightness_bound = 0;
  double gamma = 0.0;
  SpectrumMode mode = SpectrumMode::complex;
  std::shared_ptr<const QuadraticCostModel> model;  // complex mode only

  std::size_t layers() const { return bank->layers(); }
  std::size_t planes() const { return bank->planes(); }
};

// Everything except the target depth; produces StrategyProblem instances that
// share the bank and the target-independent part of the quadratic model.
class ProblemTemplate {
 public:
  ProblemTemplate(std::shared_ptr<const OtfBank> bank, double dc_noise, int brightness_bound,
                  PenaltySpec penalty = {}, CsfModel csf = {}, SpectrumMode mode = SpectrumMode::complex,
                  Execution exec = Execution::parallel);

  StrategyProblem at(double target_depth) const;
  StrategyProblem at_layer(std::size_t layer) const;

  const std::shared_ptr<const OtfBank>& bank() const { return bank_; }
  double dc_noise() const { return dc_noise_; }
  int brightness_bound() const { return brightness_bound_; }
  const PenaltySpec& penalty() const { return penalty_; }
  const CsfModel& csf() const { return csf_; }
  SpectrumMode mode() const { return mode_; }
  std::span<const double> weights() const { return weights_; }

 private:
  StrategyProblem make(double target_depth, std::vector<Spectrum> target) const;

  std::shared_ptr<const OtfBank> bank_;
  double dc_noise_;
  int brightness_bound_;
  PenaltySpec penalty_;
  CsfModel csf_;
  SpectrumMode mode_;
  std::vector<double> weights_;
  std::shared_ptr<const GramMatrix> gram_;
};

// P(z_s[plane]) = (1/A) sum_j (b_j + c) H(z_s[plane], z_t[j]).
Spectrum reconstructed_profile(const IlluminationStrategy& strategy, const StrategyProblem& problem,
                               std::size_t plane);

// Direct evaluation of J = sum_i sum_f V |H_target - P|^2 + gamma * max(A_low - A, 0).
CostBreakdown cost(const IlluminationStrategy& strategy, const StrategyProblem& problem);

// Unit vector at the layer nearest z_d (midpoint ties to the lower index).
IlluminationStrategy primitive_strategy(const StrategyProblem& problem);

struct GaParams {
  int population_size = 1000;
  int max_generations = 1000;
  double mutation_rate = 0.0;  // per bit; <= 0 selects 1/n
  double crossover_probability = 0.9;
  int elitism = 2;
  int tournament_size = 4;
  int stall_generations = 50;  // stop after this many generations without improvement; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct GenerationStats {
  int generation = 0;
  double best_cost = 0.0;
  double mean_cost = 0.0;
  int best_lit = 0;
};

struct OptimizationResult {
  IlluminationStrategy strategy;
  CostBreakdown cost;
  std::vector<GenerationStats> trace;
};

OptimizationResult optimize_ga(const StrategyProblem& problem, const GaParams& params,
                               Execution exec = Execution::parallel);

inline constexpr std::size_t kBruteForceMaxLayers = 20;

// Global minimizer over all nonzero bitstrings; ties go to smaller A, then to
// the lexicographically smallest bitstring.
OptimizationResult brute_force_optimum(const StrategyProblem& problem, Execution exec = Execution::parallel);

enum class Solver { ga, brute_force, primitive };

struct TableEntry {
  double target_depth = 0.0;
  IlluminationStrategy strategy;
  double cost = 0.0;
};

// Per-layer optimal strategies; entry k answers target depths quantized to layer k.
struct StrategyTable {
  std::vector<double> layer_depths;
  std::vector<TableEntry> entries;
  double dc_noise = 0.0;
  int brightness_bound = 0;

  std::size_t size() const { return entries.size(); }
  const IlluminationStrategy& strategy(std::size_t layer) const { return entries.at(layer).strategy; }
  // Largest Hamming distance between strategies of adjacent target depths.
  int max_adjacent_hamming() const;
  // Stable 64-bit content hash, hex encoded.
  std::string id() const;
};

StrategyTable build_strategy_table(const ProblemTemplate& problems, const GaParams& params,
                                   Solver solver = Solver::ga, Execution exec = Execution::parallel);

// Per-entry GA seeds derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tomo
