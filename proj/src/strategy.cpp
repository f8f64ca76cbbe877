#include "tomo/strategy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "hash.hpp"
#include "parallel.hpp"
#include "tomo/cost_kernels.hpp"
#include "tomo/error.hpp"
#include "tomo/layers.hpp"

namespace tomo {

// ---------------------------------------------------------------------------
// IlluminationStrategy

IlluminationStrategy::IlluminationStrategy(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_)
    if (b > 1) throw DomainError("strategy bits must be 0 or 1");
}

IlluminationStrategy IlluminationStrategy::unit(std::size_t n, std::size_t k) {
  if (k >= n) throw DomainError("unit strategy index out of range");
  std::vector<std::uint8_t> bits(n, 0);
  bits[k] = 1;
  return IlluminationStrategy(std::move(bits));
}

IlluminationStrategy IlluminationStrategy::all_on(std::size_t n) {
  return IlluminationStrategy(std::vector<std::uint8_t>(n, 1));
}

IlluminationStrategy IlluminationStrategy::parse(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw DomainError("strategy string must contain only '0' and '1'");
    bits.push_back(ch == '1' ? 1 : 0);
  }
  return IlluminationStrategy(std::move(bits));
}

int IlluminationStrategy::lit_count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string IlluminationStrategy::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j)
    if (bits_[j]) s[j] = '1';
  return s;
}

int IlluminationStrategy::hamming(const IlluminationStrategy& other) const {
  if (other.size() != size()) throw ShapeError("strategies differ in length");
  int d = 0;
  for (std::size_t j = 0; j < bits_.size(); ++j) d += bits_[j] != other.bits_[j];
  return d;
}

int brightness_bound_from_fraction(double fraction, int layer_count) {
  if (!(fraction >= 0.0)) throw ConfigurationError("brightness fraction must be >= 0");
  if (fraction == 0.0) return 0;
  return std::max(1, static_cast<int>(std::lround(fraction * layer_count)));
}

// ---------------------------------------------------------------------------
// Problem construction

ProblemTemplate::ProblemTemplate(std::shared_ptr<const OtfBank> bank, double dc_noise, int brightness_bound,
                                 PenaltySpec penalty, CsfModel csf, SpectrumMode mode, Execution exec)
    : bank_(std::move(bank)),
      dc_noise_(dc_noise),
      brightness_bound_(brightness_bound),
      penalty_(penalty),
      csf_(csf),
      mode_(mode) {
  if (!bank_) throw ConfigurationError("problem template needs an OTF bank");
  if (!(dc_noise_ >= 0.0) || !std::isfinite(dc_noise_)) throw ConfigurationError("DC noise must be >= 0");
  if (brightness_bound_ < 0) throw ConfigurationError("brightness bound must be >= 0");
  if (penalty_.mode == GammaMode::fixed && !(penalty_.value >= 0.0))
    throw ConfigurationError("penalty gamma must be >= 0");
  weights_ = csf_weights(bank_->frequencies(), csf_);
  if (mode_ == SpectrumMode::complex)
    gram_ = std::make_shared<const GramMatrix>(GramMatrix::build(*bank_, weights_, exec));
}

StrategyProblem ProblemTemplate::at(double target_depth) const {
  const auto layers = bank_->layer_depths();
  if (!std::isfinite(target_depth) || target_depth < layers.front() || target_depth > layers.back())
    throw DomainError("target depth must lie within the layer range");
  const auto planes = bank_->accommodation_depths();
  // Reuse the bank column when the target sits on a layer.
  const std::size_t k = nearest_layer(target_depth, layers);
  std::vector<Spectrum> target(planes.size());
  const bool on_grid = defocus_key(layers[k] - target_depth) == 0;
  for (std::size_t i = 0; i < planes.size(); ++i)
    target[i] = on_grid ? bank_->at(i, k) : bank_->transfer(planes[i], target_depth);
  return make(target_depth, std::move(target));
}

StrategyProblem ProblemTemplate::at_layer(std::size_t layer) const {
  const auto layers = bank_->layer_depths();
  if (layer >= layers.size()) throw DomainError("layer index out of range");
  std::vector<Spectrum> target(bank_->planes());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = bank_->at(i, layer);
  return make(layers[layer], std::move(target));
}

StrategyProblem ProblemTemplate::make(double target_depth, std::vector<Spectrum> target) const {
  StrategyProblem p;
  p.bank = bank_;
  p.target_depth = target_depth;
  p.target = std::move(target);
  p.weights = weights_;
  p.dc_noise = dc_noise_;
  p.brightness_bound = brightness_bound_;
  p.mode = mode_;
  switch (penalty_.mode) {
    case GammaMode::fixed:
      p.gamma = penalty_.value;
      break;
    case GammaMode::primitive:
      p.gamma = cost(primitive_strategy(p), p).fidelity;
      break;
    case GammaMode::bound: {
      double bound = 0.0;
      const std::size_t f = bank_->samples();
      for (std::size_t i = 0; i < p.planes(); ++i) {
        for (std::size_t q = 0; q < f; ++q) {
          double peak = 0.0;
          for (std::size_t j = 0; j < p.layers(); ++j) peak = std::max(peak, std::abs(bank_->at(i, j)[q]));
          const double r = std::abs(p.target[i][q]) + peak;
          bound += p.weights[q] * r * r;
        }
      }
      p.gamma = 2.0 * bound;
      break;
    }
  }
  if (mode_ == SpectrumMode::complex)
    p.model = std::make_shared<const QuadraticCostModel>(gram_, *bank_, p.target, p.weights, dc_noise_);
  return p;
}

// ---------------------------------------------------------------------------
// Cost

Spectrum reconstructed_profile(const IlluminationStrategy& strategy, const StrategyProblem& problem,
                               std::size_t plane) {
  const std::size_t n = problem.layers();
  if (strategy.size() != n) throw ShapeError("strategy length does not match layer count");
  if (plane >= problem.planes()) throw DomainError("accommodation plane index out of range");
  const double c = problem.dc_noise;
  double a = 0.0;
  for (std::size_t j = 0; j < n; ++j) a += (strategy[j] ? 1.0 : 0.0) + c;
  if (!(a > 0.0)) throw DegenerateStrategyError("illumination time A = 0 (all bits off, no DC noise)");
  Spectrum p(problem.bank->samples(), Complex{0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (strategy[j] ? 1.0 : 0.0) + c;
    if (w == 0.0) continue;
    const Spectrum& h = problem.bank->at(plane, j);
    for (std::size_t q = 0; q < p.size(); ++q) p[q] += w * h[q];
  }
  for (auto& v : p) v /= a;
  return p;
}

CostBreakdown cost(const IlluminationStrategy& strategy, const StrategyProblem& problem) {
  CostBreakdown out;
  for (std::size_t i = 0; i < problem.planes(); ++i) {
    const Spectrum p = reconstructed_profile(strategy, problem, i);
    out.fidelity += weighted_spectral_distance(problem.target[i], p, problem.weights, problem.mode);
  }
  const double a = strategy.illumination_time(problem.dc_noise);
  out.penalty = problem.gamma * std::max(static_cast<double>(problem.brightness_bound) - a, 0.0);
  return out;
}

IlluminationStrategy primitive_strategy(const StrategyProblem& problem) {
  return IlluminationStrategy::unit(problem.layers(), nearest_layer(problem.target_depth, problem.bank->layer_depths()));
}

// ---------------------------------------------------------------------------
// Genetic algorithm

void GaParams::validate() const {
  if (population_size < 2) throw ConfigurationError("GA population size must be >= 2");
  if (max_generations < 1) throw ConfigurationError("GA max generations must be >= 1");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0))
    throw ConfigurationError("crossover probability must lie in [0, 1]");
  if (mutation_rate > 1.0) throw ConfigurationError("mutation rate must be <= 1");
  if (elitism < 0 || elitism > population_size) throw ConfigurationError("elitism must lie in [0, population]");
  if (tournament_size < 1) throw ConfigurationError("tournament size must be >= 1");
  if (stall_generations < 0) throw ConfigurationError("stall generations must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// mt19937_64 output is fully specified by the standard; the mappings below
// avoid the implementation-defined std distributions so runs are reproducible
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

struct Ranked {
  double cost;
  int lit;
  const IlluminationStrategy* strategy;
};

bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.lit != b.lit) return a.lit < b.lit;
  return *a.strategy < *b.strategy;
}

void repair(IlluminationStrategy& s, std::size_t primitive_index) {
  if (s.lit_count() == 0) s.set(primitive_index, true);
}

}  // namespace

OptimizationResult optimize_ga(const StrategyProblem& problem, const GaParams& params, Execution exec) {
  params.validate();
  const std::size_t n = problem.layers();
  const std::size_t pop_size = static_cast<std::size_t>(params.population_size);
  const double mutation = params.mutation_rate > 0.0 ? params.mutation_rate : 1.0 / static_cast<double>(n);
  const IlluminationStrategy primitive = primitive_strategy(problem);
  const std::size_t primitive_index = nearest_layer(problem.target_depth, problem.bank->layer_depths());
  Rng rng(params.seed);

  std::vector<IlluminationStrategy> population;
  population.reserve(pop_size);
  population.push_back(primitive);
  population.push_back(IlluminationStrategy::all_on(n));
  while (population.size() < pop_size) {
    const double density = rng.uniform();
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng.uniform() < density ? 1 : 0;
    IlluminationStrategy s(std::move(bits));
    repair(s, primitive_index);
    population.push_back(std::move(s));
  }
  population.resize(pop_size);

  OptimizationResult result;
  IlluminationStrategy best = primitive;
  Ranked best_rank{fast_cost(primitive, problem), primitive.lit_count(), &best};
  int stall = 0;
  std::vector<std::size_t> order(pop_size);
  std::vector<std::size_t> rank(pop_size);

  for (int generation = 0;; ++generation) {
    const std::vector<double> costs = evaluate_population(problem, population, exec);
    std::vector<int> lits(pop_size);
    for (std::size_t k = 0; k < pop_size; ++k) lits[k] = population[k].lit_count();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ranks_before({costs[a], lits[a], &population[a]}, {costs[b], lits[b], &population[b]});
    });
    for (std::size_t r = 0; r < pop_size; ++r) rank[order[r]] = r;

    const std::size_t top = order.front();
    const Ranked candidate{costs[top], lits[top], &population[top]};
    if (ranks_before(candidate, best_rank)) {
      const bool improved = candidate.cost < best_rank.cost;
      best = population[top];
      best_rank = {candidate.cost, candidate.lit, &best};
      stall = improved ? 0 : stall + 1;
    } else {
      ++stall;
    }
    const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(pop_size);
    result.trace.push_back({generation, best_rank.cost, mean, best_rank.lit});

    if (generation + 1 >= params.max_generations) break;
    if (params.stall_generations > 0 && stall >= params.stall_generations) break;

    auto tournament = [&]() -> const IlluminationStrategy& {
      std::size_t winner = rng.below(pop_size);
      for (int t = 1; t < params.tournament_size; ++t) {
        const std::size_t challenger = rng.below(pop_size);
        if (rank[challenger] < rank[winner]) winner = challenger;
      }
      return population[winner];
    };

    std::vector<IlluminationStrategy> next;
    next.reserve(pop_size);
    for (int e = 0; e < params.elitism; ++e) next.push_back(population[order[static_cast<std::size_t>(e)]]);
    while (next.size() < pop_size) {
      const IlluminationStrategy& a = tournament();
      const IlluminationStrategy& b = tournament();
      IlluminationStrategy child = a;
      if (rng.uniform() < params.crossover_probability)
        for (std::size_t j = 0; j < n; ++j)
          if (rng.uniform() < 0.5) child.set(j, b[j]);
      for (std::size_t j = 0; j < n; ++j)
        if (rng.uniform() < mutation) child.set(j, !child[j]);
      repair(child, primitive_index);
      next.push_back(std::move(child));
    }
    population = std::move(next);
  }

  // Report exact costs; the seeded primitive guards against model round-off.
  CostBreakdown best_cost = cost(best, problem);
  const CostBreakdown primitive_cost = cost(primitive, problem);
  if (ranks_before({primitive_cost.total(), primitive.lit_count(), &primitive},
                   {best_cost.total(), best.lit_count(), &best})) {
    best = primitive;
    best_cost = primitive_cost;
  }
  result.strategy = std::move(best);
  result.cost = best_cost;
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

namespace {

struct Candidate {
  double cost = 0.0;
  int lit = 0;
  std::uint32_t mask = 0;
};

// bit j of the mask is layer j; lexicographic order on (b_0, b_1, ...) equals
// ascending bit-reversed mask.
bool lexicographically_less(std::uint32_t a, std::uint32_t b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const bool x = (a >> j) & 1u;
    const bool y = (b >> j) & 1u;
    if (x != y) return !x;
  }
  return false;
}

bool better(const Candidate& a, const Candidate& b, std::size_t n) {
  const double tol = 1e-12 * std::max(1.0, std::abs(b.cost));
  if (a.cost < b.cost - tol) return true;
  if (a.cost > b.cost + tol) return false;
  if (a.lit != b.lit) return a.lit < b.lit;
  return lexicographically_less(a.mask, b.mask, n);
}

IlluminationStrategy from_mask(std::uint32_t mask, std::size_t n) {
  std::vector<std::uint8_t> bits(n);
  for (std::size_t j = 0; j < n; ++j) bits[j] = (mask >> j) & 1u;
  return IlluminationStrategy(std::move(bits));
}

}  // namespace

OptimizationResult brute_force_optimum(const StrategyProblem& problem, Execution exec) {
  const std::size_t n = problem.layers();
  if (n > kBruteForceMaxLayers)
    throw SizeError("exhaustive search limited to " + std::to_string(kBruteForceMaxLayers) + " layers, got " +
                    std::to_string(n));
  const std::uint64_t total = (std::uint64_t{1} << n) - 1;  // masks 1..total
  constexpr std::ptrdiff_t kChunks = 64;
  std::vector<Candidate> chunk_best(kChunks);
  std::vector<unsigned char> chunk_used(kChunks, 0);
  detail::for_each_index(kChunks, exec, [&](std::ptrdiff_t c) {
    const std::uint64_t begin = 1 + total * static_cast<std::uint64_t>(c) / kChunks;
    const std::uint64_t end = 1 + total * static_cast<std::uint64_t>(c + 1) / kChunks;
    for (std::uint64_t mask = begin; mask < end; ++mask) {
      const auto m32 = static_cast<std::uint32_t>(mask);
      const Candidate cand{fast_cost(from_mask(m32, n), problem), std::popcount(m32), m32};
      if (!chunk_used[c] || better(cand, chunk_best[c], n)) {
        chunk_best[c] = cand;
        chunk_used[c] = 1;
      }
    }
  });
  Candidate best;
  bool have = false;
  for (std::ptrdiff_t c = 0; c < kChunks; ++c) {
    if (!chunk_used[c]) continue;
    if (!have || better(chunk_best[c], best, n)) {
      best = chunk_best[c];
      have = true;
    }
  }
  OptimizationResult result;
  result.strategy = from_mask(best.mask, n);
  result.cost = cost(result.strategy, problem);
  return result;
}

// ---------------------------------------------------------------------------
// Strategy tables

int StrategyTable::max_adjacent_hamming() const {
  int worst = 0;
  for (std::size_t k = 1; k < entries.size(); ++k)
    worst = std::max(worst, entries[k].strategy.hamming(entries[k - 1].strategy));
  return worst;
}

std::string StrategyTable::id() const {
  detail::Fnv1a h;
  h.values(std::span<const double>(layer_depths));
  h.value(dc_noise);
  h.value(brightness_bound);
  for (const auto& e : entries) {
    h.value(e.target_depth);
    h.values(e.strategy.bits());
  }
  return h.hex();
}

StrategyTable build_strategy_table(const ProblemTemplate& problems, const GaParams& params, Solver solver,
                                   Execution exec) {
  const auto layers = problems.bank()->layer_depths();
  StrategyTable table;
  table.layer_depths.assign(layers.begin(), layers.end());
  table.dc_noise = problems.dc_noise();
  table.brightness_bound = problems.brightness_bound();
  table.entries.resize(layers.size());
  detail::for_each_index(static_cast<std::ptrdiff_t>(layers.size()), exec, [&](std::ptrdiff_t k) {
    const StrategyProblem problem = problems.at_layer(static_cast<std::size_t>(k));
    OptimizationResult r;
    switch (solver) {
      case Solver::ga: {
        GaParams local = params;
        local.seed = derive_seed(params.seed, static_cast<std::uint64_t>(k));
        r = optimize_ga(problem, local, Execution::serial);
        break;
      }
      case Solver::brute_force:
        r = brute_force_optimum(problem, Execution::serial);
        break;
      case Solver::primitive:
        r.strategy = primitive_strategy(problem);
        r.cost = cost(r.strategy, problem);
        break;
    }
    table.entries[k] = {layers[k], std::move(r.strategy), r.cost.total()};
  });
  return table;
}

}  // namespace tomo
