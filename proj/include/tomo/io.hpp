#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tomo/contrast.hpp"
#include "tomo/image.hpp"
#include "tomo/render.hpp"
#include "tomo/simulate.hpp"
#include "tomo/strategy.hpp"

namespace tomo::io {

namespace fs = std::filesystem;

double srgb_to_linear(double v);
double linear_to_srgb(double v);

// 8- or 16-bit PNG (or anything imread accepts), sRGB-decoded to linear [0, 1].
// Gray stays one channel; color becomes RGB; alpha is dropped.
Image read_color(const fs::path& path);
// Linear [0, 1] to 16-bit sRGB PNG; values are clipped here and nowhere else.
void write_color(const fs::path& path, const Image& image);
// Linear 16-bit PNG of the first channel after clipping to [0, 1].
void write_gray16(const fs::path& path, const Image& image);

// Depth maps in diopters: .pfm holds values directly; .png is 16-bit gray with
// a "<file>.json" sidecar giving min_diopters and max_diopters.
Image read_depth(const fs::path& path);
void write_depth(const fs::path& path, const Image& depth);

// Directory with mask_000.png .. (1-bit), display.png and manifest.json.
void write_sequence(const fs::path& dir, const BacklightSequence& sequence);
BacklightSequence read_sequence(const fs::path& dir);

// depth_00.png .. plus stack.json.
void write_focal_stack(const fs::path& dir, const FocalStack& stack);

// <stem>.png (16-bit, rows = target depths) and <stem>.csv (z_d, z_s, value).
// Signed maps (error maps) are stored in the PNG as 0.5 + value / 2.
void write_contrast_map(const fs::path& stem, const ContrastMap& map, bool is_signed = false);

inline constexpr std::uint32_t kTableVersion = 1;
void write_table(const fs::path& path, const StrategyTable& table);
StrategyTable read_table(const fs::path& path);
void write_table_csv(const fs::path& path, const StrategyTable& table);

void write_trace_csv(const fs::path& path, const std::vector<GenerationStats>& trace);
void write_strategy_json(const fs::path& path, const OptimizationResult& result, double target_depth,
                         double dc_noise);

void ensure_directory(const fs::path& dir);

}  // namespace tomo::io
