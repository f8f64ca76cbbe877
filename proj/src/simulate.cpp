#include "tomo/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "fft.hpp"
#include "hash.hpp"
#include "parallel.hpp"
#include "tomo/error.hpp"
#include "tomo/layers.hpp"

namespace tomo {

void SimulationConfig::validate() const {
  optics.validate();
  aberrations.validate();
  if (!(dc_noise >= 0.0) || !std::isfinite(dc_noise)) throw ConfigurationError("dc_noise must be finite and >= 0");
  if (!(field_of_view > 0.0) || field_of_view >= 180.0) throw ConfigurationError("field_of_view must lie in (0, 180)");
  if (!(depth_resolution > 0.0)) throw ConfigurationError("depth_resolution must be > 0");
  for (double w : channel_wavelengths)
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigurationError("channel wavelengths must be > 0");
}

namespace {

constexpr int kBlocks = 16;

// Mirror-extended 2H x 2W real grid and its half spectrum.
struct Extent {
  int width;
  int height;
  int rows() const { return 2 * height; }
  int cols() const { return 2 * width; }
  std::size_t real_size() const { return static_cast<std::size_t>(rows()) * cols(); }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(rows()) * (width + 1); }
};

void mirror_extend(std::span<const double> src, const Extent& e, double* dst) {
  const int w = e.width;
  const int h = e.height;
  const int cols = e.cols();
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    double* top = dst + static_cast<std::size_t>(y) * cols;
    double* bottom = dst + static_cast<std::size_t>(2 * h - 1 - y) * cols;
    for (int x = 0; x < w; ++x) {
      top[x] = row[x];
      top[2 * w - 1 - x] = row[x];
    }
    std::copy_n(top, cols, bottom);
  }
}

// OTF sampled on the half-spectrum grid of the extended image.
std::vector<Complex> sample_transfer(const OtfSurface& surface, const Extent& e, double pitch_deg) {
  std::vector<Complex> out(e.spectrum_size());
  const int rows = e.rows();
  const double fx_step = 1.0 / (e.cols() * pitch_deg);
  const double fy_step = 1.0 / (rows * pitch_deg);
  for (int ky = 0; ky < rows; ++ky) {
    const int sy = ky <= e.height ? ky : ky - rows;
    for (int kx = 0; kx <= e.width; ++kx)
      out[static_cast<std::size_t>(ky) * (e.width + 1) + kx] = surface.at(kx * fx_step, sy * fy_step);
  }
  return out;
}

// Contiguous run of pixels (in offset-sorted order) from one layer that falls
// in one effective-depth bin.
struct Run {
  std::int64_t bin;
  int layer;
  std::size_t begin;
  std::size_t end;
};

struct ChannelPlan {
  std::vector<std::size_t> order;     // pixels sorted by field-curvature offset
  std::vector<Run> runs;              // sorted by bin
  std::vector<std::int64_t> bins;     // unique bins, ascending
  std::vector<double> bin_depth;      // effective image depth per bin
};

ChannelPlan plan_bins(const std::vector<double>& layer_depths, const std::vector<char>& layer_used,
                      const SimulationConfig& config, const OpticalConfig& optics, int width, int height) {
  ChannelPlan plan;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  plan.order.resize(pixels);
  std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
  const bool curved = config.aberrations.seidel_field_curvature != 0.0;

  std::vector<double> offset(pixels, 0.0);
  if (curved) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        offset[static_cast<std::size_t>(y) * width + x] =
            field_curvature_offset(field_fraction(x, y, width, height), config.aberrations, optics);
    std::stable_sort(plan.order.begin(), plan.order.end(),
                     [&](std::size_t a, std::size_t b) { return offset[a] < offset[b]; });
  }

  for (std::size_t l = 0; l < layer_depths.size(); ++l) {
    if (!layer_used[l]) continue;
    if (!curved) {
      plan.runs.push_back({defocus_key(layer_depths[l]), static_cast<int>(l), 0, pixels});
      continue;
    }
    std::size_t begin = 0;
    while (begin < pixels) {
      const auto bin = static_cast<std::int64_t>(
          std::llround((layer_depths[l] + offset[plan.order[begin]]) / config.depth_resolution));
      std::size_t end = begin + 1;
      while (end < pixels &&
             std::llround((layer_depths[l] + offset[plan.order[end]]) / config.depth_resolution) == bin)
        ++end;
      plan.runs.push_back({bin, static_cast<int>(l), begin, end});
      begin = end;
    }
  }
  std::stable_sort(plan.runs.begin(), plan.runs.end(), [](const Run& a, const Run& b) { return a.bin < b.bin; });
  for (const Run& r : plan.runs)
    if (plan.bins.empty() || plan.bins.back() != r.bin) plan.bins.push_back(r.bin);
  plan.bin_depth.reserve(plan.bins.size());
  for (std::int64_t b : plan.bins)
    plan.bin_depth.push_back(curved ? static_cast<double>(b) * config.depth_resolution : defocus_from_key(b));
  return plan;
}

}  // namespace

Image simulate_retinal_image(const BacklightSequence& sequence, double accommodation_depth,
                             const SimulationConfig& config, Execution exec) {
  config.validate();
  sequence.validate();
  if (!std::isfinite(accommodation_depth)) throw DomainError("accommodation depth must be finite");
  const Image& display = sequence.display_image;
  const int width = display.width;
  const int height = display.height;
  const int channels = display.channels;
  if (width <= 0 || height <= 0 || channels <= 0) throw ManifestError("sequence has an empty display image");
  if (!config.channel_wavelengths.empty() && static_cast<int>(config.channel_wavelengths.size()) != channels)
    throw ConfigurationError("channel_wavelengths must list one wavelength per image channel");

  const std::size_t pixels = display.pixels();
  const auto& layer_depths = sequence.layer_depths();
  const std::size_t n_layers = layer_depths.size();
  const double c = config.dc_noise;
  const double subframes = static_cast<double>(sequence.masks.size());

  // Per-pixel weight of each layer: sum over its subframes of (mask + c), over the normalizer.
  std::vector<double> divisor(pixels, subframes);
  if (config.luminance == LuminanceMode::normalized) {
    for (std::size_t p = 0; p < pixels; ++p) divisor[p] = c * subframes;
    for (const Mask& m : sequence.masks)
      for (std::size_t p = 0; p < pixels; ++p) divisor[p] += m.data[p];
  }
  std::vector<std::vector<double>> layer_weight(n_layers);
  std::vector<char> layer_used(n_layers, 0);
  for (std::size_t k = 0; k < sequence.masks.size(); ++k) {
    const auto l = static_cast<std::size_t>(sequence.schedule.layer_of_subframe[k]);
    auto& w = layer_weight[l];
    if (w.empty()) w.assign(pixels, 0.0);
    const auto& mask = sequence.masks[k].data;
    for (std::size_t p = 0; p < pixels; ++p) w[p] += mask[p] + c;
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto& w = layer_weight[l];
    if (w.empty()) continue;
    for (std::size_t p = 0; p < pixels; ++p) {
      w[p] = divisor[p] > 0.0 ? w[p] / divisor[p] : 0.0;
      if (w[p] != 0.0) layer_used[l] = 1;
    }
  }

  const Extent extent{width, height};
  const double pitch = config.pixel_pitch(width);
  const double nyquist_diag = std::hypot(0.5 / pitch, 0.5 / pitch);
  Image out(width, height, channels);

  for (int ch = 0; ch < channels; ++ch) {
    OpticalConfig optics = config.optics;
    if (!config.channel_wavelengths.empty()) optics.wavelength = config.channel_wavelengths[ch];
    const ChannelPlan plan = plan_bins(layer_depths, layer_used, config, optics, width, height);
    const std::size_t bins = plan.bins.size();
    const double keep = nyquist_diag + 2.0 * optics.native_spacing();

    // Transfer functions per bin.
    std::vector<std::vector<Complex>> transfer(bins);
    detail::for_each_index(static_cast<std::ptrdiff_t>(bins), exec, [&](std::ptrdiff_t b) {
      const OtfSurface surface =
          pupil_otf_surface(accommodation_depth - plan.bin_depth[b], optics, config.aberrations, keep);
      transfer[b] = sample_transfer(surface, extent, pitch);
    });

    // Fixed block partition of the bins keeps the reduction order independent of threads.
    const int blocks = static_cast<int>(std::min<std::size_t>(kBlocks, std::max<std::size_t>(bins, 1)));
    std::vector<std::vector<Complex>> partial(blocks);
    const auto image_plane = display.plane(ch);
    detail::for_each_index(blocks, exec, [&](std::ptrdiff_t blk) {
      const std::size_t first = bins * blk / blocks;
      const std::size_t last = bins * (blk + 1) / blocks;
      auto& acc = partial[blk];
      acc.assign(extent.spectrum_size(), Complex{});
      if (first == last) return;
      auto real = detail::alloc_real(extent.real_size());
      auto spec = detail::alloc_complex(extent.spectrum_size());
      const auto plan_fwd = detail::FftPlan::r2c_2d(extent.rows(), extent.cols(), real.get(), spec.get());
      std::vector<double> field(pixels);
      auto run = std::lower_bound(plan.runs.begin(), plan.runs.end(), plan.bins[first],
                                  [](const Run& r, std::int64_t bin) { return r.bin < bin; });
      for (std::size_t b = first; b < last; ++b) {
        std::fill(field.begin(), field.end(), 0.0);
        for (; run != plan.runs.end() && run->bin == plan.bins[b]; ++run) {
          const auto& w = layer_weight[run->layer];
          for (std::size_t i = run->begin; i < run->end; ++i) {
            const std::size_t p = plan.order[i];
            field[p] += w[p] * image_plane[p];
          }
        }
        mirror_extend(field, extent, real.get());
        plan_fwd.execute();
        const auto& h = transfer[b];
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += Complex(spec[k][0], spec[k][1]) * h[k];
      }
    });

    auto spec = detail::alloc_complex(extent.spectrum_size());
    auto real = detail::alloc_real(extent.real_size());
    for (std::size_t k = 0; k < extent.spectrum_size(); ++k) {
      Complex sum{};
      for (const auto& acc : partial) sum += acc[k];
      spec[k][0] = sum.real();
      spec[k][1] = sum.imag();
    }
    const auto plan_inv = detail::FftPlan::c2r_2d(extent.rows(), extent.cols(), spec.get(), real.get());
    plan_inv.execute();
    const double scale = 1.0 / static_cast<double>(extent.real_size());
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out.at(ch, y, x) = real[static_cast<std::size_t>(y) * extent.cols() + x] * scale;
  }
  return out;
}

FocalStack simulate_focal_stack(const BacklightSequence& sequence, std::span<const double> depths,
                                const SimulationConfig& config, Execution exec) {
  if (depths.empty()) throw ConfigurationError("focal stack needs at least one accommodation depth");
  if (!strictly_increasing(depths)) throw ConfigurationError("focal stack depths must be strictly increasing");
  FocalStack stack;
  stack.depths.assign(depths.begin(), depths.end());
  stack.sequence_id = sequence_id(sequence);
  stack.optics_hash = optics_hash(config);
  stack.images.reserve(depths.size());
  for (double z : depths) stack.images.push_back(simulate_retinal_image(sequence, z, config, exec));
  return stack;
}

std::string optics_hash(const SimulationConfig& config) {
  detail::Fnv1a h;
  const OpticalConfig& o = config.optics;
  h.value(o.wavelength);
  h.value(o.pupil_diameter);
  h.value(o.pupil_grid);
  h.value(o.max_frequency);
  h.value(o.frequency_samples);
  for (const auto& t : config.aberrations.zernike) {
    h.value(t.index);
    h.value(t.waves);
  }
  h.value(config.aberrations.seidel_field_curvature);
  h.value(config.dc_noise);
  h.value(config.field_of_view);
  h.value(static_cast<int>(config.luminance));
  h.value(config.depth_resolution);
  h.values(std::span<const double>(config.channel_wavelengths));
  return h.hex();
}

std::string sequence_id(const BacklightSequence& sequence) {
  detail::Fnv1a h;
  h.text(sequence.schedule.id());
  h.text(sequence.table_id);
  h.values(std::span<const double>(sequence.schedule.layer_depths));
  h.values(std::span<const int>(sequence.schedule.layer_of_subframe));
  h.value(sequence.display_image.width);
  h.value(sequence.display_image.height);
  h.value(sequence.display_image.channels);
  h.values(std::span<const double>(sequence.display_image.data));
  for (const Mask& m : sequence.masks) h.values(std::span<const std::uint8_t>(m.data));
  return h.hex();
}

// ---------------------------------------------------------------------------
// Sharpness

namespace {

// Band-passed first channel (mirror-extended FFT, hard annulus).
std::vector<double> band_pass(const Image& image, double pitch_deg, Band band) {
  if (image.width <= 0 || image.height <= 0 || image.channels <= 0) throw ShapeError("empty image");
  if (!(pitch_deg > 0.0)) throw DomainError("pixel pitch must be > 0");
  if (!(band.low >= 0.0) || !(band.high > band.low)) throw DomainError("band must satisfy 0 <= low < high");
  const Extent e{image.width, image.height};
  auto real = detail::alloc_real(e.real_size());
  auto spec = detail::alloc_complex(e.spectrum_size());
  const auto fwd = detail::FftPlan::r2c_2d(e.rows(), e.cols(), real.get(), spec.get());
  const auto inv = detail::FftPlan::c2r_2d(e.rows(), e.cols(), spec.get(), real.get());
  mirror_extend(image.plane(0), e, real.get());
  fwd.execute();
  const int rows = e.rows();
  const double fx_step = 1.0 / (e.cols() * pitch_deg);
  const double fy_step = 1.0 / (rows * pitch_deg);
  for (int ky = 0; ky < rows; ++ky) {
    const int sy = ky <= e.height ? ky : ky - rows;
    for (int kx = 0; kx <= e.width; ++kx) {
      const double f = std::hypot(kx * fx_step, sy * fy_step);
      if (f < band.low || f > band.high) {
        auto& cell = spec[static_cast<std::size_t>(ky) * (e.width + 1) + kx];
        cell[0] = cell[1] = 0.0;
      }
    }
  }
  inv.execute();
  std::vector<double> out(image.pixels());
  const double scale = 1.0 / static_cast<double>(e.real_size());
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out[static_cast<std::size_t>(y) * image.width + x] = real[static_cast<std::size_t>(y) * e.cols() + x] * scale;
  return out;
}

// Box mean with the window clipped at the borders, via a summed-area table.
std::vector<double> box_mean(std::span<const double> v, int width, int height, int radius) {
  const int w1 = width + 1;
  std::vector<double> sat(static_cast<std::size_t>(w1) * (height + 1), 0.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      sat[static_cast<std::size_t>(y + 1) * w1 + x + 1] = v[static_cast<std::size_t>(y) * width + x] +
                                                         sat[static_cast<std::size_t>(y) * w1 + x + 1] +
                                                         sat[static_cast<std::size_t>(y + 1) * w1 + x] -
                                                         sat[static_cast<std::size_t>(y) * w1 + x];
  std::vector<double> out(v.size());
  for (int y = 0; y < height; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(height, y + radius + 1);
    for (int x = 0; x < width; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(width, x + radius + 1);
      const double sum = sat[static_cast<std::size_t>(y1) * w1 + x1] - sat[static_cast<std::size_t>(y0) * w1 + x1] -
                         sat[static_cast<std::size_t>(y1) * w1 + x0] + sat[static_cast<std::size_t>(y0) * w1 + x0];
      out[static_cast<std::size_t>(y) * width + x] = sum / ((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

}  // namespace

double band_limited_contrast(const Image& image, double pixel_pitch_deg, Band band) {
  const auto bp = band_pass(image, pixel_pitch_deg, band);
  const double mean = std::accumulate(image.plane(0).begin(), image.plane(0).end(), 0.0) / image.pixels();
  if (!(mean > 0.0)) throw DomainError("contrast of an image with non-positive mean");
  double energy = 0.0;
  for (double v : bp) energy += v * v;
  return std::sqrt(energy / bp.size()) / mean;
}

Image local_band_contrast(const Image& image, double pixel_pitch_deg, int radius, Band band) {
  if (radius < 0) throw DomainError("radius must be >= 0");
  auto bp = band_pass(image, pixel_pitch_deg, band);
  for (double& v : bp) v *= v;
  const auto energy = box_mean(bp, image.width, image.height, radius);
  const auto mean = box_mean(image.plane(0), image.width, image.height, radius);
  Image out(image.width, image.height, 1);
  auto dst = out.plane(0);
  for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = mean[p] > 0.0 ? std::sqrt(energy[p]) / mean[p] : 0.0;
  return out;
}

}  // namespace tomo
