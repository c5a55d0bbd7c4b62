#include "vblc/vbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vblc {

namespace {
constexpr double kLightFloor = 1e-3;
}

AtmosphericLight estimate_atmospheric_light(const Image& img, const VbmConfig& cfg) {
  const int n = img.pixel_count();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> lum(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    lum[i] = (img.data[i * 3 + 0] + img.data[i * 3 + 1] + img.data[i * 3 + 2]) / 3.0;
  }
  const int take = std::min(n, std::max(1, cfg.light_sample_count));
  // stable sort keeps row-major order among equal-luminance pixels
  std::stable_sort(order.begin(), order.end(),
                   [&lum](int a, int b) { return lum[a] > lum[b]; });
  double sum[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < take; ++i) {
    const int p = order[i];
    sum[0] += img.data[p * 3 + 0];
    sum[1] += img.data[p * 3 + 1];
    sum[2] += img.data[p * 3 + 2];
  }
  AtmosphericLight a;
  a.r = std::max(kLightFloor, sum[0] / take);
  a.g = std::max(kLightFloor, sum[1] / take);
  a.b = std::max(kLightFloor, sum[2] / take);
  return a;
}

double omega_s(double mean_sat, double gamma) { return std::exp(-mean_sat * gamma); }

ScalarMap dark_channel(const Image& img, const AtmosphericLight& a, const VbmConfig& cfg) {
  ScalarMap ratio(img.height, img.width);
  const int n = img.pixel_count();
  for (int i = 0; i < n; ++i) {
    const double r = img.data[i * 3 + 0] / a.r;
    const double g = img.data[i * 3 + 1] / a.g;
    const double b = img.data[i * 3 + 2] / a.b;
    ratio.data[i] = std::min(r, std::min(g, b));
  }
  // min over channels commutes with the windowed min, so one filter pass
  // on the channel-min map is enough.
  ScalarMap dark = min_filter(ratio, cfg.patch_radius);
  for (double& v : dark.data) v = clamp01(v);
  return dark;
}

ScalarMap transmission(const ScalarMap& dark, double w, const VbmConfig& cfg) {
  ScalarMap t(dark.height, dark.width);
  for (std::size_t i = 0; i < dark.data.size(); ++i) {
    t.data[i] = std::max(1.0 - w * dark.data[i], cfg.t_floor);
  }
  return t;
}

Image recover(const Image& img, const ScalarMap& t, const AtmosphericLight& a) {
  Image out(img.height, img.width);
  const int n = img.pixel_count();
  for (int i = 0; i < n; ++i) {
    const double ti = t.data[i];
    out.data[i * 3 + 0] = clamp01((img.data[i * 3 + 0] - a.r * (1.0 - ti)) / ti);
    out.data[i * 3 + 1] = clamp01((img.data[i * 3 + 1] - a.g * (1.0 - ti)) / ti);
    out.data[i * 3 + 2] = clamp01((img.data[i * 3 + 2] - a.b * (1.0 - ti)) / ti);
  }
  return out;
}

Image boost(const Image& img, const VbmConfig& cfg) {
  BoostStats stats;
  return boost(img, cfg, stats);
}

Image boost(const Image& img, const VbmConfig& cfg, BoostStats& stats) {
  stats.night = mean_luminance(img) < cfg.night_luminance_threshold;
  stats.mean_sat_before = mean_saturation(img);

  const Image work = stats.night ? invert(img) : img;
  // saturation and airlight come from the post-switch image
  const double ms = mean_saturation(work);
  stats.omega = omega_s(ms, cfg.gamma);
  const AtmosphericLight a = estimate_atmospheric_light(work, cfg);
  const ScalarMap dark = dark_channel(work, a, cfg);
  const ScalarMap t = transmission(dark, stats.omega, cfg);
  Image out = recover(work, t, a);
  if (stats.night) out = invert(out);

  stats.mean_sat_after = mean_saturation(out);
  return out;
}

}  // namespace vblc
