// Command-line front end. Each subcommand prints one JSON summary line on
// stdout; progress goes to stderr.

#include <chrono>
#include <fstream>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tomo/config.hpp"
#include "tomo/contrast.hpp"
#include "tomo/error.hpp"
#include "tomo/execution.hpp"
#include "tomo/io.hpp"
#include "tomo/render.hpp"
#include "tomo/simulate.hpp"
#include "tomo/strategy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tomo;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool quiet = false;
};

Globals g;

void log(const std::string& msg) {
  if (!g.quiet) std::cerr << "tomo: " << msg << '\n';
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ToolConfig load() {
  ToolConfig cfg = g.config_path.empty() ? ToolConfig{} : load_config(g.config_path);
  if (g.seed) cfg.ga.seed = *g.seed;
  cfg.validate();
  return cfg;
}

ProblemTemplate make_template(const ToolConfig& cfg, std::vector<double> planes) {
  Stopwatch sw;
  auto layers = cfg.layers.depths();
  log("building OTF bank, " + std::to_string(planes.size()) + " planes x " + std::to_string(layers.size()) +
      " layers");
  auto bank = std::make_shared<const OtfBank>(
      OtfBank::build(std::move(planes), std::move(layers), cfg.optics, cfg.aberrations));
  ProblemTemplate problems(bank, cfg.dc_noise, cfg.brightness_bound(), cfg.penalty, cfg.csf, cfg.spectrum_mode);
  log("bank ready in " + std::to_string(sw.seconds()) + " s");
  return problems;
}

void check_table_grid(const StrategyTable& table, const ToolConfig& cfg) {
  if (table.layer_depths != cfg.layers.depths())
    throw ConfigurationError("table layer grid does not match the [layers] section of the config");
}

SubframeSchedule make_schedule(const ToolConfig& cfg, const std::vector<double>& layers) {
  return build_subframe_schedule(cfg.waveform, cfg.cycle_rate, layers, cfg.subframes_per_cycle);
}

RgbdScene load_scene(const std::string& scene_path, const std::string& depth_path, const ToolConfig& cfg) {
  RgbdScene scene;
  scene.color = io::read_color(scene_path);
  scene.depth = depth_to_diopters(io::read_depth(depth_path), cfg.depth_units, cfg.layers.min_diopters,
                                  cfg.layers.max_diopters);
  scene.validate();
  return scene;
}

void summary(json j) { std::cout << j.dump() << std::endl; }

json lit_stats(const StrategyTable& table) {
  int lo = 0;
  int hi = 0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    const int lit = table.strategy(k).lit_count();
    lo = k == 0 ? lit : std::min(lo, lit);
    hi = k == 0 ? lit : std::max(hi, lit);
  }
  return {{"min_lit", lo}, {"max_lit", hi}};
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
  double target_depth = 0.0;
  std::string out = "optimize_out";
};

void run_optimize(const OptimizeArgs& a) {
  const ToolConfig cfg = load();
  const ProblemTemplate problems = make_template(cfg, cfg.plane_depths());
  const StrategyProblem problem = problems.at(a.target_depth);
  Stopwatch sw;
  OptimizationResult result;
  switch (cfg.solver) {
    case Solver::ga: result = optimize_ga(problem, cfg.ga); break;
    case Solver::brute_force: result = brute_force_optimum(problem); break;
    case Solver::primitive: {
      result.strategy = primitive_strategy(problem);
      result.cost = cost(result.strategy, problem);
      break;
    }
  }
  log("solved in " + std::to_string(sw.seconds()) + " s");
  const auto primitive = primitive_strategy(problem);
  io::write_strategy_json(fs::path(a.out) / "strategy.json", result, a.target_depth, cfg.dc_noise);
  io::write_trace_csv(fs::path(a.out) / "trace.csv", result.trace);
  summary({{"command", "optimize"},
           {"target_depth", a.target_depth},
           {"bitstring", result.strategy.to_string()},
           {"lit", result.strategy.lit_count()},
           {"cost", result.cost.total()},
           {"primitive_cost", cost(primitive, problem).total()},
           {"brightness_bound", problem.brightness_bound},
           {"out", a.out}});
}

struct TableArgs {
  std::string out = "table.bin";
  std::string csv;
};

void run_table(const TableArgs& a) {
  const ToolConfig cfg = load();
  const ProblemTemplate problems = make_template(cfg, cfg.plane_depths());
  Stopwatch sw;
  const StrategyTable table = build_strategy_table(problems, cfg.ga, cfg.solver);
  log("table solved in " + std::to_string(sw.seconds()) + " s");
  io::write_table(a.out, table);
  const std::string csv = a.csv.empty() ? fs::path(a.out).replace_extension(".csv").string() : a.csv;
  io::write_table_csv(csv, table);
  json j = {{"command", "table"},
            {"id", table.id()},
            {"entries", table.size()},
            {"brightness_bound", table.brightness_bound},
            {"max_adjacent_hamming", table.max_adjacent_hamming()},
            {"out", a.out},
            {"csv", csv}};
  j.update(lit_stats(table));
  summary(j);
}

struct RenderArgs {
  std::string scene;
  std::string depth;
  std::string table;
  std::string out = "sequence";
  std::string luminance;  // hdr only
};

void run_render(const RenderArgs& a, bool hdr) {
  const ToolConfig cfg = load();
  const StrategyTable table = io::read_table(a.table);
  check_table_grid(table, cfg);
  const RgbdScene scene = load_scene(a.scene, a.depth, cfg);
  const SubframeSchedule schedule = make_schedule(cfg, table.layer_depths);
  const QuantizedDepth q = quantize_depth(scene.depth, table.layer_depths);
  BacklightSequence seq;
  if (hdr) {
    const Image lum = a.luminance.empty() ? Image(scene.color.width, scene.color.height, 1, 0.5)
                                          : io::read_color(a.luminance);
    if (!lum.same_shape(scene.color)) throw ShapeError("luminance map must match the scene size");
    Image gray(lum.width, lum.height, 1);
    for (std::size_t p = 0; p < gray.pixels(); ++p) {
      double sum = 0.0;
      for (int c = 0; c < lum.channels; ++c) sum += lum.plane(c)[p];
      gray.plane(0)[p] = sum / lum.channels;
    }
    const ProblemTemplate problems = make_template(cfg, cfg.plane_depths());
    seq = render_hdr_sequence(scene, table, schedule, HdrOptions::from_luminance(gray), problems);
  } else {
    seq = render_backlight_sequence(scene, table, schedule);
  }
  io::write_sequence(a.out, seq);
  summary({{"command", hdr ? "hdr" : "render"},
           {"masks", seq.masks.size()},
           {"width", seq.width()},
           {"height", seq.height()},
           {"clamped_pixels", q.clamped},
           {"schedule", schedule.id()},
           {"table_id", seq.table_id},
           {"out", a.out}});
}

struct PrecompArgs {
  std::string scene;
  std::string depth;
  std::string out = "depth_precompensated.pfm";
  std::optional<double> waves;
};

void run_precompensate(const PrecompArgs& a) {
  ToolConfig cfg = load();
  if (a.waves) cfg.aberrations.seidel_field_curvature = *a.waves;
  const RgbdScene scene = load_scene(a.scene, a.depth, cfg);
  const auto layers = cfg.layers.depths();
  const Precompensation result = precompensate_depth_map(scene, cfg.aberrations, cfg.optics, layers);
  io::write_depth(a.out, result.scene.depth);
  summary({{"command", "precompensate"},
           {"field_curvature_waves", cfg.aberrations.seidel_field_curvature},
           {"full_field_offset_diopters", field_curvature_offset(1.0, cfg.aberrations, cfg.optics)},
           {"clamped_pixels", result.clamped},
           {"out", a.out}});
}

struct SimulateArgs {
  std::string sequence;
  std::string out = "focal_stack";
  std::vector<double> depths;
};

void run_simulate(const SimulateArgs& a) {
  ToolConfig cfg = load();
  if (!a.depths.empty()) cfg.focal_depths = a.depths;
  cfg.validate();
  const BacklightSequence seq = io::read_sequence(a.sequence);
  const SimulationConfig sim = cfg.simulation();
  Stopwatch sw;
  const FocalStack stack = simulate_focal_stack(seq, sim.accommodation_depths, sim);
  log("simulated " + std::to_string(stack.images.size()) + " images in " + std::to_string(sw.seconds()) + " s");
  io::write_focal_stack(a.out, stack);
  json means = json::array();
  for (const auto& img : stack.images) means.push_back(img.mean());
  summary({{"command", "simulate"},
           {"images", stack.images.size()},
           {"depths", stack.depths},
           {"means", means},
           {"sequence_id", stack.sequence_id},
           {"optics_hash", stack.optics_hash},
           {"out", a.out}});
}

struct ContrastArgs {
  std::string table;
  std::string out = "contrast";
};

void run_contrast(const ContrastArgs& a) {
  const ToolConfig cfg = load();
  const StrategyTable table = io::read_table(a.table);
  check_table_grid(table, cfg);
  const ProblemTemplate problems = make_template(
      cfg, accommodation_planes(cfg.layers.min_diopters, cfg.layers.max_diopters, cfg.contrast_planes));
  ContrastOptions options;
  options.reduction = cfg.contrast_reduction;
  options.slice_frequency = cfg.contrast_slice_frequency;
  options.target_depths =
      accommodation_planes(cfg.layers.min_diopters, cfg.layers.max_diopters, std::max(cfg.contrast_targets, 2));
  if (cfg.contrast_targets == 1) options.target_depths = {table.layer_depths.front()};
  const ContrastMap map = contrast_map(table, problems, options);
  const ContrastMap target = target_contrast_map(problems, options);
  const ContrastMap error = contrast_error(map, target);
  const fs::path stem(a.out);
  io::write_contrast_map(stem, map);
  io::write_contrast_map(fs::path(a.out + "_target"), target);
  io::write_contrast_map(fs::path(a.out + "_error"), error, true);
  summary({{"command", "contrast"},
           {"targets", map.target_depths.size()},
           {"planes", map.accommodation_depths.size()},
           {"error_summed_magnitude", summed_magnitude(error)},
           {"table_id", table.id()},
           {"out", a.out}});
}

struct ScheduleArgs {
  std::string out;
};

void run_schedule(const ScheduleArgs& a) {
  const ToolConfig cfg = load();
  const SubframeSchedule s = make_schedule(cfg, cfg.layers.depths());
  json layers = json::array();
  for (int l : s.layer_of_subframe) layers.push_back(l + 1);
  json j = {{"command", "schedule"},
            {"id", s.id()},
            {"waveform", cfg.waveform == Waveform::ramp ? "ramp" : "triangle"},
            {"layers", s.layer_depths.size()},
            {"subframes_per_cycle", s.subframes_per_cycle},
            {"cycle_rate_hz", s.cycle_rate},
            {"subframe_rate_hz", s.subframe_rate()},
            {"layer_spacing_diopters", cfg.layers.spacing()}};
  if (!a.out.empty()) {
    json full = j;
    full["layer_of_subframe"] = layers;
    full["layer_depths"] = s.layer_depths;
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw IoError("cannot open " + a.out + " for writing");
    out << full.dump(2) << '\n';
    j["out"] = a.out;
  }
  summary(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tomographic display illumination-strategy toolkit"};
  app.require_subcommand(1);
  app.add_option("--config", g.config_path, "TOML configuration file");
  app.add_option("--seed", g.seed, "seed for every stochastic step (overrides [ga].seed)");
  app.add_option("--threads", g.threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", g.quiet, "no progress on stderr");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "optimal strategy for one target depth");
  optimize->add_option("--target-depth", opt.target_depth, "diopters")->required();
  optimize->add_option("--out", opt.out, "output directory")->capture_default_str();

  TableArgs tab;
  auto* table = app.add_subcommand("table", "strategy table over the layer grid");
  table->add_option("--out", tab.out, "binary table path")->capture_default_str();
  table->add_option("--csv", tab.csv, "CSV path (default: next to --out)");

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "backlight masks for an RGB-D scene");
  render->add_option("--scene", ren.scene, "color PNG")->required();
  render->add_option("--depth", ren.depth, "depth PNG (+ .json sidecar) or PFM")->required();
  render->add_option("--table", ren.table, "strategy table")->required();
  render->add_option("--out", ren.out, "output directory")->capture_default_str();

  RenderArgs hdr_args;
  auto* hdr = app.add_subcommand("hdr", "HDR backlight masks (0.5x to 1.5x illumination time)");
  hdr->add_option("--scene", hdr_args.scene, "color PNG")->required();
  hdr->add_option("--depth", hdr_args.depth, "depth PNG or PFM")->required();
  hdr->add_option("--table", hdr_args.table, "strategy table")->required();
  hdr->add_option("--luminance", hdr_args.luminance, "desired luminance PNG in [0, 1] (default 0.5)")
      ;
  hdr->add_option("--out", hdr_args.out, "output directory")->capture_default_str();

  PrecompArgs pre;
  auto* precomp = app.add_subcommand("precompensate", "depth map corrected for field curvature");
  precomp->add_option("--scene", pre.scene, "color PNG")->required();
  precomp->add_option("--depth", pre.depth, "depth PNG or PFM")->required();
  precomp->add_option("--field-curvature", pre.waves, "W220 in waves (overrides the config)");
  precomp->add_option("--out", pre.out, "output depth (.pfm or .png)")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "retinal focal stack of a backlight sequence");
  simulate->add_option("--sequence", sim.sequence, "sequence directory")->required();
  simulate->add_option("--depths", sim.depths, "accommodation depths, diopters")->delimiter(',');
  simulate->add_option("--out", sim.out, "output directory")->capture_default_str();

  ContrastArgs con;
  auto* contrast = app.add_subcommand("contrast", "contrast and contrast-error maps of a table");
  contrast->add_option("--table", con.table, "strategy table")->required();
  contrast->add_option("--out", con.out, "output path stem")->capture_default_str();

  ScheduleArgs sch;
  auto* schedule = app.add_subcommand("schedule", "subframe-to-layer schedule");
  schedule->add_option("--out", sch.out, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (g.threads > 0) set_worker_threads(g.threads);

  try {
    if (*optimize) run_optimize(opt);
    else if (*table) run_table(tab);
    else if (*render) run_render(ren, false);
    else if (*hdr) run_render(hdr_args, true);
    else if (*precomp) run_precompensate(pre);
    else if (*simulate) run_simulate(sim);
    else if (*contrast) run_contrast(con);
    else if (*schedule) run_schedule(sch);
  } catch (const IoError& e) {
    std::cerr << "tomo: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ManifestError& e) {
    std::cerr << "tomo: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "tomo: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "tomo: internal error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
