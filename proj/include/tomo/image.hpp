#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tomo {

// Planar floating-point image; channel-major, then row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  std::span<double> plane(int c) { return {data.data() + static_cast<std::size_t>(c) * pixels(), pixels()}; }
  std::span<const double> plane(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * pixels(), pixels()};
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  double mean() const;
};

// One binary backlight frame.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Mask&) const = default;
};

}  // namespace tomo
