#include "tomo/reference.hpp"

#include <cmath>
#include <map>

#include "tomo/error.hpp"

namespace tomo::reference {

std::vector<double> population_costs(const StrategyProblem& problem, std::span<const IlluminationStrategy> population) {
  std::vector<double> out;
  out.reserve(population.size());
  for (const auto& s : population) out.push_back(cost(s, problem).total());
  return out;
}

BacklightSequence render_backlight_sequence(const RgbdScene& scene, const StrategyTable& table,
                                            const SubframeSchedule& schedule) {
  scene.validate();
  if (table.layer_depths != schedule.layer_depths || !schedule.bijective())
    throw ConfigurationError("table and schedule do not match");
  const auto& layers = table.layer_depths;
  BacklightSequence seq;
  seq.display_image = scene.color;
  seq.schedule = schedule;
  seq.table_id = table.id();
  const int w = scene.color.width;
  const int h = scene.color.height;
  for (std::size_t k = 0; k < schedule.layer_of_subframe.size(); ++k) {
    Mask mask(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double z = scene.depth.at(0, y, x);
        std::size_t best = 0;
        for (std::size_t j = 1; j < layers.size(); ++j)
          if (std::abs(layers[j] - z) < std::abs(layers[best] - z)) best = j;
        mask.at(y, x) = table.strategy(best)[schedule.layer_of_subframe[k]] ? 1 : 0;
      }
    }
    seq.masks.push_back(std::move(mask));
  }
  return seq;
}

Image retinal_image_direct(const BacklightSequence& sequence, double accommodation_depth,
                           const SimulationConfig& config) {
  config.validate();
  sequence.validate();
  const Image& display = sequence.display_image;
  const int w = display.width;
  const int h = display.height;
  const int rows = 2 * h;
  const int cols = 2 * w;
  const double pitch = config.pixel_pitch(w);
  const double c = config.dc_noise;
  const auto& layers = sequence.layer_depths();
  const double subframes = static_cast<double>(sequence.masks.size());
  const bool curved = config.aberrations.seidel_field_curvature != 0.0;

  Image out(w, h, display.channels);
  for (int ch = 0; ch < display.channels; ++ch) {
    OpticalConfig optics = config.optics;
    if (!config.channel_wavelengths.empty()) optics.wavelength = config.channel_wavelengths[ch];
    const double keep = std::hypot(0.5 / pitch, 0.5 / pitch) + 2.0 * optics.native_spacing();

    // Source field per effective image depth.
    std::map<double, std::vector<double>> fields;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double lit = 0.0;
        for (const Mask& m : sequence.masks) lit += m.at(y, x);
        const double divisor = config.luminance == LuminanceMode::normalized ? lit + c * subframes : subframes;
        if (divisor <= 0.0) continue;
        const double offset =
            curved ? field_curvature_offset(field_fraction(x, y, w, h), config.aberrations, optics) : 0.0;
        for (std::size_t k = 0; k < sequence.masks.size(); ++k) {
          const double weight = (sequence.masks[k].at(y, x) + c) / divisor;
          if (weight == 0.0) continue;
          double depth = layers[sequence.schedule.layer_of_subframe[k]];
          if (curved) depth = std::round((depth + offset) / config.depth_resolution) * config.depth_resolution;
          auto& field = fields[depth];
          if (field.empty()) field.assign(static_cast<std::size_t>(w) * h, 0.0);
          field[static_cast<std::size_t>(y) * w + x] += weight * display.at(ch, y, x);
        }
      }
    }

    std::vector<double> acc(static_cast<std::size_t>(w) * h, 0.0);
    for (const auto& [depth, field] : fields) {
      const OtfSurface surface = pupil_otf_surface(accommodation_depth - depth, optics, config.aberrations, keep);
      // PSF on the periodic extended grid by inverse DFT of the sampled OTF.
      std::vector<Complex> otf(static_cast<std::size_t>(rows) * cols);
      for (int ky = 0; ky < rows; ++ky) {
        const int sy = ky <= h ? ky : ky - rows;
        for (int kx = 0; kx < cols; ++kx) {
          const int sx = kx <= w ? kx : kx - cols;
          otf[static_cast<std::size_t>(ky) * cols + kx] = surface.at(sx / (cols * pitch), sy / (rows * pitch));
        }
      }
      std::vector<double> psf(static_cast<std::size_t>(rows) * cols);
      for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
          Complex sum{};
          for (int ky = 0; ky < rows; ++ky) {
            for (int kx = 0; kx < cols; ++kx) {
              const double phase = 2.0 * kPi * (static_cast<double>(ky) * y / rows + static_cast<double>(kx) * x / cols);
              sum += otf[static_cast<std::size_t>(ky) * cols + kx] * Complex(std::cos(phase), std::sin(phase));
            }
          }
          psf[static_cast<std::size_t>(y) * cols + x] = sum.real() / (static_cast<double>(rows) * cols);
        }
      }
      auto extended = [&](int y, int x) {
        const int sy = y < h ? y : 2 * h - 1 - y;
        const int sx = x < w ? x : 2 * w - 1 - x;
        return field[static_cast<std::size_t>(sy) * w + sx];
      };
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double sum = 0.0;
          for (int sy = 0; sy < rows; ++sy)
            for (int sx = 0; sx < cols; ++sx)
              sum += extended(sy, sx) * psf[static_cast<std::size_t>((y - sy + rows) % rows) * cols + (x - sx + cols) % cols];
          acc[static_cast<std::size_t>(y) * w + x] += sum;
        }
      }
    }
    std::copy(acc.begin(), acc.end(), out.plane(ch).begin());
  }
  return out;
}

}  // namespace tomo::reference
