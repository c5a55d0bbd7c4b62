#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace vblc {

inline constexpr int kChannels = 3;

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Interleaved rgb intensity field, row-major, values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w),
        data(static_cast<std::size_t>(h) * w * kChannels, fill) {}

  int pixel_count() const { return height * width; }

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width;
  }
};

// Row-major real field (transmission, depth, saturation, masks, ...).
struct ScalarMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  ScalarMap() = default;
  ScalarMap(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Row-major class-id field. kIgnoreId marks unlabeled pixels.
struct LabelMap {
  static constexpr std::uint8_t kIgnoreId = 255;

  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const LabelMap& o) const {
    return height == o.height && width == o.width;
  }
};

// Per-pixel (max_c - min_c) / max_c; 0 on pure-black pixels.
ScalarMap saturation_map(const Image& img);

// Mean of saturation_map over all pixels.
double mean_saturation(const Image& img);

// Channel-wise 1 - v.
Image invert(const Image& img);

// Morphological erosion over a square window of side 2*radius+1,
// clamp-to-edge at the borders.
ScalarMap min_filter(const ScalarMap& map, int radius);

// Mean over pixels of (r + g + b) / 3.
double mean_luminance(const Image& img);

}  // namespace vblc
