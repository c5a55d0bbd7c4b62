#include "vblc/image.hpp"

#include <algorithm>

namespace vblc {

ScalarMap saturation_map(const Image& img) {
  ScalarMap out(img.height, img.width);
  const std::size_t n = static_cast<std::size_t>(img.pixel_count());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.data[i * 3 + 0];
    const double g = img.data[i * 3 + 1];
    const double b = img.data[i * 3 + 2];
    const double hi = std::max(r, std::max(g, b));
    const double lo = std::min(r, std::min(g, b));
    out.data[i] = hi > 0.0 ? (hi - lo) / hi : 0.0;
  }
  return out;
}

double mean_saturation(const Image& img) {
  const ScalarMap sat = saturation_map(img);
  double sum = 0.0;
  for (double v : sat.data) sum += v;
  return sat.data.empty() ? 0.0 : sum / static_cast<double>(sat.data.size());
}

Image invert(const Image& img) {
  Image out(img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = 1.0 - img.data[i];
  return out;
}

ScalarMap min_filter(const ScalarMap& map, int radius) {
  if (radius <= 0) return map;
  const int h = map.height;
  const int w = map.width;
  // Square-window min separates into a horizontal and a vertical pass.
  ScalarMap rows(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      double m = map.at(y, x0);
      for (int xx = x0 + 1; xx <= x1; ++xx) m = std::min(m, map.at(y, xx));
      rows.at(y, x) = m;
    }
  }
  ScalarMap out(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius);
    const int y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      double m = rows.at(y0, x);
      for (int yy = y0 + 1; yy <= y1; ++yy) m = std::min(m, rows.at(yy, x));
      out.at(y, x) = m;
    }
  }
  return out;
}

double mean_luminance(const Image& img) {
  double sum = 0.0;
  const std::size_t n = static_cast<std::size_t>(img.pixel_count());
  for (std::size_t i = 0; i < n; ++i) {
    sum += (img.data[i * 3 + 0] + img.data[i * 3 + 1] + img.data[i * 3 + 2]) / 3.0;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace vblc
