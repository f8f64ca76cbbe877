#include "tomo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "tomo/error.hpp"
#include "tomo/zernike.hpp"

namespace tomo {

int ToolConfig::brightness_bound() const {
  return a_low ? *a_low : brightness_bound_from_fraction(a_low_fraction, layers.count);
}

std::vector<double> ToolConfig::plane_depths() const {
  const int m = accommodation_planes > 0 ? accommodation_planes : layers.count + 1;
  return tomo::accommodation_planes(layers.min_diopters, layers.max_diopters, m);
}

std::vector<double> ToolConfig::focal_stack_depths() const {
  if (!focal_depths.empty()) return focal_depths;
  return tomo::accommodation_planes(layers.min_diopters, layers.max_diopters, 7);
}

SimulationConfig ToolConfig::simulation() const {
  SimulationConfig s;
  s.accommodation_depths = focal_stack_depths();
  s.optics = optics;
  s.aberrations = aberrations;
  s.dc_noise = dc_noise;
  s.field_of_view = field_of_view;
  s.luminance = luminance;
  s.depth_resolution = depth_resolution;
  s.channel_wavelengths = channel_wavelengths;
  return s;
}

void ToolConfig::validate() const {
  optics.validate();
  aberrations.validate();
  layers.validate();
  ga.validate();
  csf.validate();
  simulation().validate();
  if (accommodation_planes < 0 || accommodation_planes == 1)
    throw ConfigurationError("layers.accommodation_planes must be 0 (auto) or >= 2");
  if (!(dc_noise >= 0.0)) throw ConfigurationError("noise.c must be >= 0");
  if (!(a_low_fraction >= 0.0)) throw ConfigurationError("brightness.a_low_fraction must be >= 0");
  if (a_low && *a_low < 0) throw ConfigurationError("brightness.a_low must be >= 0");
  if (penalty.mode == GammaMode::fixed && !(penalty.value >= 0.0))
    throw ConfigurationError("brightness.gamma must be >= 0");
  if (!(cycle_rate > 0.0)) throw ConfigurationError("schedule.cycle_rate must be > 0");
  if (subframes_per_cycle < 0) throw ConfigurationError("schedule.subframes_per_cycle must be >= 0");
  if (contrast_targets < 1 || contrast_planes < 2) throw ConfigurationError("contrast grid too small");
  if (!strictly_increasing(focal_stack_depths())) throw ConfigurationError("simulate.focal_depths must increase");
}

namespace {

class Reader {
 public:
  Reader(const toml::table& root, std::string section) : section_(std::move(section)) {
    const toml::node* node = root.get(section_);
    if (node && !node->is_table()) throw ConfigurationError("[" + section_ + "] must be a table");
    table_ = node ? node->as_table() : nullptr;
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!table_) return;
    const toml::node* node = table_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node->value<double>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = node->value_exact<std::int64_t>()) {
        out = static_cast<int>(*v);
        return;
      }
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto v = node->value_exact<std::int64_t>(); v && *v >= 0) {
        out = static_cast<std::uint64_t>(*v);
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value_exact<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (const auto* arr = node->as_array()) {
        std::vector<double> values;
        for (const auto& item : *arr) {
          auto v = item.value<double>();
          if (!v) fail(key, "a list of numbers");
          values.push_back(*v);
        }
        out = std::move(values);
        return;
      }
    }
    fail(key, expected<T>());
  }

  bool has(const char* key) const { return table_ && table_->get(key); }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, value] : *table_)
      if (!seen_.count(std::string(key.str())))
        throw ConfigurationError("unknown key [" + section_ + "]." + std::string(key.str()));
  }

 private:
  template <class T>
  static const char* expected() {
    if constexpr (std::is_same_v<T, std::string>) return "a string";
    if constexpr (std::is_same_v<T, double>) return "a number";
    return "an integer";
  }
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigurationError("[" + section_ + "]." + key + " must be " + what);
  }

  std::string section_;
  const toml::table* table_ = nullptr;
  std::set<std::string> seen_;
};

template <class E>
E pick(const std::string& value, std::initializer_list<std::pair<const char*, E>> options, const char* key) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigurationError(std::string(key) + " must be one of: " + names);
}

}  // namespace

ToolConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigurationError(msg.str());
  }
  static const std::set<std::string> sections = {"optics", "layers", "noise",    "brightness", "ga",
                                                 "csf",    "schedule", "simulate", "contrast"};
  for (const auto& [key, value] : root)
    if (!sections.count(std::string(key.str())))
      throw ConfigurationError("unknown config section [" + std::string(key.str()) + "]");

  ToolConfig cfg;
  {
    Reader r(root, "optics");
    r.read("wavelength", cfg.optics.wavelength);
    r.read("pupil_diameter", cfg.optics.pupil_diameter);
    r.read("pupil_grid", cfg.optics.pupil_grid);
    r.read("max_frequency", cfg.optics.max_frequency);
    r.read("frequency_samples", cfg.optics.frequency_samples);
    r.read("field_curvature_waves", cfg.aberrations.seidel_field_curvature);
    std::string zernike_file;
    r.read("zernike_file", zernike_file);
    if (!zernike_file.empty()) {
      std::filesystem::path p(zernike_file);
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p);
      if (!in) throw IoError("cannot open Zernike table " + p.string());
      cfg.aberrations.zernike = parse_zernike_table(in);
    }
    r.finish();
  }
  {
    Reader r(root, "layers");
    r.read("count", cfg.layers.count);
    r.read("min_diopters", cfg.layers.min_diopters);
    r.read("max_diopters", cfg.layers.max_diopters);
    r.read("accommodation_planes", cfg.accommodation_planes);
    r.finish();
  }
  {
    Reader r(root, "noise");
    r.read("c", cfg.dc_noise);
    r.finish();
  }
  {
    Reader r(root, "brightness");
    r.read("a_low_fraction", cfg.a_low_fraction);
    int a_low = 0;
    r.read("a_low", a_low);
    if (r.has("a_low")) cfg.a_low = a_low;
    std::string mode = "bound";
    r.read("gamma_mode", mode);
    cfg.penalty.mode =
        pick<GammaMode>(mode, {{"bound", GammaMode::bound}, {"primitive", GammaMode::primitive}, {"fixed", GammaMode::fixed}},
                        "brightness.gamma_mode");
    r.read("gamma", cfg.penalty.value);
    r.finish();
  }
  {
    Reader r(root, "ga");
    r.read("population_size", cfg.ga.population_size);
    r.read("max_generations", cfg.ga.max_generations);
    r.read("mutation_rate", cfg.ga.mutation_rate);
    r.read("crossover_probability", cfg.ga.crossover_probability);
    r.read("elitism", cfg.ga.elitism);
    r.read("tournament_size", cfg.ga.tournament_size);
    r.read("stall_generations", cfg.ga.stall_generations);
    r.read("seed", cfg.ga.seed);
    std::string solver = "ga";
    r.read("solver", solver);
    cfg.solver = pick<Solver>(
        solver, {{"ga", Solver::ga}, {"brute_force", Solver::brute_force}, {"primitive", Solver::primitive}},
        "ga.solver");
    r.finish();
  }
  {
    Reader r(root, "csf");
    r.read("peak_frequency", cfg.csf.peak_frequency);
    r.read("peak_sensitivity", cfg.csf.peak_sensitivity);
    r.read("low_frequency_exponent", cfg.csf.low_frequency_exponent);
    r.read("high_frequency_decay", cfg.csf.high_frequency_decay);
    std::string mode = "complex";
    r.read("spectrum_mode", mode);
    cfg.spectrum_mode = pick<SpectrumMode>(
        mode, {{"complex", SpectrumMode::complex}, {"magnitude", SpectrumMode::magnitude}}, "csf.spectrum_mode");
    r.finish();
  }
  {
    Reader r(root, "schedule");
    std::string wf = "ramp";
    r.read("waveform", wf);
    cfg.waveform = pick<Waveform>(wf, {{"ramp", Waveform::ramp}, {"triangle", Waveform::triangle}}, "schedule.waveform");
    r.read("cycle_rate", cfg.cycle_rate);
    r.read("subframes_per_cycle", cfg.subframes_per_cycle);
    r.finish();
  }
  {
    Reader r(root, "simulate");
    r.read("field_of_view", cfg.field_of_view);
    std::string lum = "normalized";
    r.read("luminance", lum);
    cfg.luminance = pick<LuminanceMode>(
        lum, {{"normalized", LuminanceMode::normalized}, {"absolute", LuminanceMode::absolute}}, "simulate.luminance");
    r.read("depth_resolution", cfg.depth_resolution);
    r.read("channel_wavelengths", cfg.channel_wavelengths);
    r.read("focal_depths", cfg.focal_depths);
    std::string units = "diopters";
    r.read("depth_units", units);
    cfg.depth_units = pick<DepthUnits>(
        units, {{"diopters", DepthUnits::diopters}, {"meters", DepthUnits::meters}, {"affine", DepthUnits::affine}},
        "simulate.depth_units");
    r.finish();
  }
  {
    Reader r(root, "contrast");
    r.read("targets", cfg.contrast_targets);
    r.read("planes", cfg.contrast_planes);
    std::string red = "mean";
    r.read("reduction", red);
    cfg.contrast_reduction = pick<ContrastReduction>(
        red, {{"mean", ContrastReduction::mean}, {"max", ContrastReduction::max}, {"slice", ContrastReduction::slice}},
        "contrast.reduction");
    r.read("slice_frequency", cfg.contrast_slice_frequency);
    r.finish();
  }
  cfg.validate();
  return cfg;
}

ToolConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace tomo
