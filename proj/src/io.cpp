#include "tomo/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tomo/error.hpp"

namespace tomo::io {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_mat(const fs::path& path, const cv::Mat& mat, const std::vector<int>& params = {}) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat, params);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

cv::Mat read_mat(const fs::path& path, int flags) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), flags);
  } catch (const cv::Exception& e) {
    throw IoError("cannot read " + path.string() + ": " + e.what());
  }
  if (mat.empty()) throw IoError("cannot decode " + path.string());
  return mat;
}

double unit_scale(int depth) {
  switch (depth) {
    case CV_8U: return 1.0 / 255.0;
    case CV_16U: return 1.0 / 65535.0;
    case CV_32F:
    case CV_64F: return 1.0;
    default: throw IoError("unsupported pixel depth");
  }
}

// OpenCV interleaved BGR(A) -> planar RGB doubles, scaled to [0, 1].
Image from_mat(const cv::Mat& mat) {
  cv::Mat f;
  mat.convertTo(f, CV_64F, unit_scale(mat.depth()));
  const int src_channels = f.channels();
  const int channels = src_channels >= 3 ? 3 : 1;
  Image img(f.cols, f.rows, channels);
  for (int y = 0; y < f.rows; ++y) {
    const double* row = f.ptr<double>(y);
    for (int x = 0; x < f.cols; ++x) {
      if (channels == 1) {
        img.at(0, y, x) = row[x * src_channels];
      } else {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x * src_channels + (2 - c)];
      }
    }
  }
  return img;
}

cv::Mat to_mat16(const Image& img, int channels, double (*encode)(double)) {
  cv::Mat mat(img.height, img.width, CV_16UC(channels));
  for (int y = 0; y < img.height; ++y) {
    auto* row = mat.ptr<std::uint16_t>(y);
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const int src = channels == 1 ? 0 : 2 - c;
        const double v = encode(std::clamp(img.at(src, y, x), 0.0, 1.0));
        row[x * channels + c] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      }
    }
  }
  return mat;
}

double identity(double v) { return v; }

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ManifestError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string mask_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mask_%03zu.png", k);
  return buf;
}

const char* waveform_name(Waveform w) { return w == Waveform::ramp ? "ramp" : "triangle"; }

}  // namespace

void ensure_directory(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

double srgb_to_linear(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }

double linear_to_srgb(double v) { return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

Image read_color(const fs::path& path) {
  Image img = from_mat(read_mat(path, cv::IMREAD_UNCHANGED));
  for (double& v : img.data) v = srgb_to_linear(v);
  return img;
}

void write_color(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw ShapeError("color output needs 1 or 3 channels");
  write_mat(path, to_mat16(image, image.channels, linear_to_srgb));
}

void write_gray16(const fs::path& path, const Image& image) { write_mat(path, to_mat16(image, 1, identity)); }

Image read_depth(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm") {
    cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
    if (mat.channels() != 1) throw IoError("depth PFM must be single-channel: " + path.string());
    return from_mat(mat);
  }
  cv::Mat mat = read_mat(path, cv::IMREAD_UNCHANGED);
  if (mat.channels() != 1 || mat.depth() != CV_16U)
    throw IoError("depth PNG must be 16-bit single-channel: " + path.string());
  const fs::path meta = sidecar(path);
  if (!fs::exists(meta)) throw IoError("depth PNG needs a sidecar " + meta.string());
  const json j = read_json(meta);
  double lo = 0.0;
  double hi = 0.0;
  try {
    lo = j.at("min_diopters").get<double>();
    hi = j.at("max_diopters").get<double>();
  } catch (const json::exception& e) {
    throw ManifestError("depth sidecar " + meta.string() + ": " + e.what());
  }
  Image img = from_mat(mat);
  for (double& v : img.data) v = lo + v * (hi - lo);
  return img;
}

void write_depth(const fs::path& path, const Image& depth) {
  if (depth.channels != 1) throw ShapeError("depth map must be single-channel");
  if (path.extension() == ".pfm") {
    cv::Mat mat(depth.height, depth.width, CV_32FC1);
    for (int y = 0; y < depth.height; ++y)
      for (int x = 0; x < depth.width; ++x) mat.at<float>(y, x) = static_cast<float>(depth.at(0, y, x));
    write_mat(path, mat);
    return;
  }
  const auto [lo_it, hi_it] = std::minmax_element(depth.data.begin(), depth.data.end());
  const double lo = depth.data.empty() ? 0.0 : *lo_it;
  const double hi = depth.data.empty() ? 0.0 : *hi_it;
  Image scaled = depth;
  for (double& v : scaled.data) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  write_mat(path, to_mat16(scaled, 1, identity));
  write_json(sidecar(path), json{{"min_diopters", lo}, {"max_diopters", hi}});
}

void write_sequence(const fs::path& dir, const BacklightSequence& sequence) {
  sequence.validate();
  ensure_directory(dir);
  json masks = json::array();
  for (std::size_t k = 0; k < sequence.masks.size(); ++k) {
    const Mask& m = sequence.masks[k];
    cv::Mat mat(m.height, m.width, CV_8UC1);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) mat.at<std::uint8_t>(y, x) = m.at(y, x) ? 255 : 0;
    write_mat(dir / mask_name(k), mat, {cv::IMWRITE_PNG_BILEVEL, 1});
    masks.push_back(mask_name(k));
  }
  write_color(dir / "display.png", sequence.display_image);
  const SubframeSchedule& s = sequence.schedule;
  json manifest = {
      {"format", "tomo-backlight-sequence"},
      {"version", 1},
      {"width", sequence.width()},
      {"height", sequence.height()},
      {"display", "display.png"},
      {"masks", masks},
      {"table_id", sequence.table_id},
      {"layer_depths", s.layer_depths},
      {"schedule",
       {{"id", s.id()},
        {"waveform", waveform_name(s.waveform)},
        {"cycle_rate_hz", s.cycle_rate},
        {"subframes_per_cycle", s.subframes_per_cycle},
        {"subframe_rate_hz", s.subframe_rate()},
        {"layer_of_subframe", s.layer_of_subframe}}},
  };
  write_json(dir / "manifest.json", manifest);
}

BacklightSequence read_sequence(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw ManifestError("no manifest.json in " + dir.string());
  const json j = read_json(manifest_path);
  BacklightSequence seq;
  std::vector<std::string> names;
  try {
    const auto& s = j.at("schedule");
    const std::string wf = s.at("waveform").get<std::string>();
    if (wf != "ramp" && wf != "triangle") throw ManifestError("unknown waveform " + wf);
    seq.schedule.waveform = wf == "ramp" ? Waveform::ramp : Waveform::triangle;
    seq.schedule.cycle_rate = s.at("cycle_rate_hz").get<double>();
    seq.schedule.subframes_per_cycle = s.at("subframes_per_cycle").get<int>();
    seq.schedule.layer_of_subframe = s.at("layer_of_subframe").get<std::vector<int>>();
    seq.schedule.layer_depths = j.at("layer_depths").get<std::vector<double>>();
    seq.table_id = j.at("table_id").get<std::string>();
    names = j.at("masks").get<std::vector<std::string>>();
    seq.display_image = read_color(dir / j.at("display").get<std::string>());
  } catch (const json::exception& e) {
    throw ManifestError("manifest " + manifest_path.string() + ": " + e.what());
  }
  for (const auto& name : names) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw ManifestError("missing mask " + p.string());
    const cv::Mat mat = read_mat(p, cv::IMREAD_GRAYSCALE);
    Mask m(mat.cols, mat.rows);
    for (int y = 0; y < mat.rows; ++y)
      for (int x = 0; x < mat.cols; ++x) m.at(y, x) = mat.at<std::uint8_t>(y, x) ? 1 : 0;
    seq.masks.push_back(std::move(m));
  }
  seq.validate();
  return seq;
}

void write_focal_stack(const fs::path& dir, const FocalStack& stack) {
  ensure_directory(dir);
  json images = json::array();
  for (std::size_t k = 0; k < stack.images.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "depth_%02zu.png", k);
    write_color(dir / name, stack.images[k]);
    images.push_back({{"accommodation_diopters", stack.depths[k]}, {"file", name}, {"mean", stack.images[k].mean()}});
  }
  write_json(dir / "stack.json", json{{"sequence_id", stack.sequence_id},
                                      {"optics_hash", stack.optics_hash},
                                      {"images", images}});
}

void write_contrast_map(const fs::path& stem, const ContrastMap& map, bool is_signed) {
  const std::size_t rows = map.target_depths.size();
  const std::size_t cols = map.accommodation_depths.size();
  Image img(static_cast<int>(cols), static_cast<int>(rows), 1);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t s = 0; s < cols; ++s) {
      const double v = map.at(t, s);
      img.at(0, static_cast<int>(t), static_cast<int>(s)) = is_signed ? 0.5 + 0.5 * v : v;
    }
  fs::path png = stem;
  png += ".png";
  write_gray16(png, img);
  fs::path csv = stem;
  csv += ".csv";
  auto out = open_out(csv);
  out << "z_d,z_s,value\n";
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t s = 0; s < cols; ++s)
      out << num(map.target_depths[t]) << ',' << num(map.accommodation_depths[s]) << ',' << num(map.at(t, s))
          << '\n';
}

// ---------------------------------------------------------------------------
// Strategy tables: "TOMOTBL\0", u32 version, u32 header length, JSON header,
// then per entry f64 target depth, f64 cost, u32 lit count, packed bits (LSB
// first). Little-endian.

namespace {

constexpr char kMagic[8] = {'T', 'O', 'M', 'O', 'T', 'B', 'L', '\0'};
static_assert(std::endian::native == std::endian::little, "table I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ManifestError("truncated table " + path.string());
  return v;
}

}  // namespace

void write_table(const fs::path& path, const StrategyTable& table) {
  const std::size_t n = table.layer_depths.size();
  const json header = {{"layers", n},
                       {"entries", table.size()},
                       {"dc_noise", table.dc_noise},
                       {"brightness_bound", table.brightness_bound},
                       {"layer_depths", table.layer_depths},
                       {"id", table.id()}};
  const std::string text = header.dump();
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kTableVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& e : table.entries) {
    if (e.strategy.size() != n) throw ShapeError("table entry length does not match the layer count");
    put<double>(out, e.target_depth);
    put<double>(out, e.cost);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.strategy.lit_count()));
    std::vector<char> packed((n + 7) / 8, 0);
    for (std::size_t j = 0; j < n; ++j)
      if (e.strategy[j]) packed[j / 8] = static_cast<char>(packed[j / 8] | (1 << (j % 8)));
    out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

StrategyTable read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ManifestError(path.string() + " is not a strategy table");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kTableVersion)
    throw ManifestError("unsupported table version " + std::to_string(version) + " in " + path.string());
  const auto len = get<std::uint32_t>(in, path);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw ManifestError("truncated table header in " + path.string());
  StrategyTable table;
  std::size_t entries = 0;
  try {
    const json header = json::parse(text);
    table.layer_depths = header.at("layer_depths").get<std::vector<double>>();
    table.dc_noise = header.at("dc_noise").get<double>();
    table.brightness_bound = header.at("brightness_bound").get<int>();
    entries = header.at("entries").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ManifestError("table header in " + path.string() + ": " + e.what());
  }
  const std::size_t n = table.layer_depths.size();
  for (std::size_t k = 0; k < entries; ++k) {
    TableEntry e;
    e.target_depth = get<double>(in, path);
    e.cost = get<double>(in, path);
    const auto lit = get<std::uint32_t>(in, path);
    std::vector<char> packed((n + 7) / 8);
    if (!in.read(packed.data(), static_cast<std::streamsize>(packed.size())))
      throw ManifestError("truncated table " + path.string());
    std::vector<std::uint8_t> bits(n);
    for (std::size_t j = 0; j < n; ++j) bits[j] = (packed[j / 8] >> (j % 8)) & 1;
    e.strategy = IlluminationStrategy(std::move(bits));
    if (static_cast<std::uint32_t>(e.strategy.lit_count()) != lit)
      throw ManifestError("corrupt entry " + std::to_string(k) + " in " + path.string());
    table.entries.push_back(std::move(e));
  }
  return table;
}

void write_table_csv(const fs::path& path, const StrategyTable& table) {
  auto out = open_out(path);
  out << "target_depth_diopters,bitstring,A,cost\n";
  for (const auto& e : table.entries)
    out << num(e.target_depth) << ',' << e.strategy.to_string() << ','
        << num(e.strategy.illumination_time(table.dc_noise)) << ',' << num(e.cost) << '\n';
}

void write_trace_csv(const fs::path& path, const std::vector<GenerationStats>& trace) {
  auto out = open_out(path);
  out << "generation,best_cost,mean_cost,best_lit\n";
  for (const auto& g : trace)
    out << g.generation << ',' << num(g.best_cost) << ',' << num(g.mean_cost) << ',' << g.best_lit << '\n';
}

void write_strategy_json(const fs::path& path, const OptimizationResult& result, double target_depth,
                         double dc_noise) {
  write_json(path, json{{"target_depth_diopters", target_depth},
                        {"bitstring", result.strategy.to_string()},
                        {"lit", result.strategy.lit_count()},
                        {"A", result.strategy.illumination_time(dc_noise)},
                        {"cost", result.cost.total()},
                        {"fidelity", result.cost.fidelity},
                        {"penalty", result.cost.penalty},
                        {"generations", result.trace.size()}});
}

}  // namespace tomo::io
