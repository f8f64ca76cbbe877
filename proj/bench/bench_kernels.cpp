// Serial reference vs OpenMP kernels. Arg 0 selects Execution::serial, 1 parallel.
#include <benchmark/benchmark.h>

#include <random>

#include "tomo/cost_kernels.hpp"
#include "tomo/layers.hpp"
#include "tomo/reference.hpp"
#include "tomo/render.hpp"
#include "tomo/simulate.hpp"
#include "tomo/strategy.hpp"

using namespace tomo;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

OpticalConfig bench_optics() {
  OpticalConfig o;
  o.pupil_grid = 128;
  return o;
}

const std::shared_ptr<const OtfBank>& bank() {
  static const auto b = std::make_shared<const OtfBank>(
      OtfBank::build(accommodation_planes(0.0, 5.5, 81), LayerGrid{80, 0.0, 5.5}.depths(), bench_optics()));
  return b;
}

std::vector<IlluminationStrategy> population(std::size_t count, std::size_t n) {
  std::mt19937 rng(1);
  std::vector<IlluminationStrategy> pop;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = (rng() % 8) == 0;
    bits[k % n] = 1;
    pop.emplace_back(bits);
  }
  return pop;
}

RgbdScene scene(int w, int h) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RgbdScene s{Image(w, h, 3), Image(w, h, 1)};
  for (double& v : s.color.data) v = u(rng);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) s.depth.at(0, y, x) = 5.5 * x / (w - 1);
  return s;
}

StrategyTable identity_table() {
  StrategyTable t;
  t.layer_depths = LayerGrid{80, 0.0, 5.5}.depths();
  for (std::size_t k = 0; k < 80; ++k) t.entries.push_back({t.layer_depths[k], IlluminationStrategy::unit(80, k), 0.0});
  return t;
}

void BM_BankBuild(benchmark::State& state) {
  for (auto _ : state) {
    auto b = OtfBank::build(accommodation_planes(0.0, 5.5, 21), LayerGrid{20, 0.0, 5.5}.depths(), bench_optics(), {},
                            mode(state));
    benchmark::DoNotOptimize(b);
  }
}
BENCHMARK(BM_BankBuild)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PopulationCost(benchmark::State& state) {
  ProblemTemplate t(bank(), 0.05, 2);
  const auto p = t.at(2.75);
  const auto pop = population(1000, 80);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_population(p, pop, mode(state)));
  state.SetItemsProcessed(state.iterations() * pop.size());
}
BENCHMARK(BM_PopulationCost)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PopulationCostReference(benchmark::State& state) {
  ProblemTemplate t(bank(), 0.05, 2);
  const auto p = t.at(2.75);
  const auto pop = population(1000, 80);
  for (auto _ : state) benchmark::DoNotOptimize(reference::population_costs(p, pop));
  state.SetItemsProcessed(state.iterations() * pop.size());
}
BENCHMARK(BM_PopulationCostReference)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
  const auto s = scene(512, 384);
  const auto table = identity_table();
  const auto schedule = build_subframe_schedule(Waveform::ramp, 60, table.layer_depths);
  for (auto _ : state) benchmark::DoNotOptimize(render_backlight_sequence(s, table, schedule, mode(state)));
}
BENCHMARK(BM_Render)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RenderReference(benchmark::State& state) {
  const auto s = scene(512, 384);
  const auto table = identity_table();
  const auto schedule = build_subframe_schedule(Waveform::ramp, 60, table.layer_depths);
  for (auto _ : state) benchmark::DoNotOptimize(reference::render_backlight_sequence(s, table, schedule));
}
BENCHMARK(BM_RenderReference)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto s = scene(128, 96);
  const auto table = identity_table();
  const auto seq = render_backlight_sequence(s, table, build_subframe_schedule(Waveform::ramp, 60, table.layer_depths));
  SimulationConfig cfg;
  cfg.optics = bench_optics();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_retinal_image(seq, 2.0, cfg, mode(state)));
}
BENCHMARK(BM_Simulate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulateDirectReference(benchmark::State& state) {
  const auto s = scene(12, 8);
  const auto table = identity_table();
  const auto seq = render_backlight_sequence(s, table, build_subframe_schedule(Waveform::ramp, 60, table.layer_depths));
  SimulationConfig cfg;
  cfg.optics = bench_optics();
  for (auto _ : state) benchmark::DoNotOptimize(reference::retinal_image_direct(seq, 2.0, cfg));
}
BENCHMARK(BM_SimulateDirectReference)->Unit(benchmark::kMillisecond);

void BM_SimulateSmall(benchmark::State& state) {
  const auto s = scene(12, 8);
  const auto table = identity_table();
  const auto seq = render_backlight_sequence(s, table, build_subframe_schedule(Waveform::ramp, 60, table.layer_depths));
  SimulationConfig cfg;
  cfg.optics = bench_optics();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_retinal_image(seq, 2.0, cfg, mode(state)));
}
BENCHMARK(BM_SimulateSmall)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
