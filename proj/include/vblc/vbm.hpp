#pragma once

#include "vblc/image.hpp"

namespace vblc {

struct VbmConfig {
  double gamma = 4.0;                      // dehaze-strength scaling factor
  int patch_radius = 7;                    // dark-channel window radius (15x15)
  int light_sample_count = 1000;           // brightest pixels averaged into A
  double night_luminance_threshold = 0.25; // below this the inverse switch fires
  double t_floor = 0.1;                    // minimum transmission
};

struct AtmosphericLight {
  double r = 1.0;
  double g = 1.0;
  double b = 1.0;

  double channel(int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

// Average of the light_sample_count brightest pixels (per-pixel luminance,
// ties broken by row-major index), each channel floored at 1e-3.
AtmosphericLight estimate_atmospheric_light(const Image& img, const VbmConfig& cfg);

// Saturation-adaptive modulation coefficient e^(-mean_sat * gamma).
double omega_s(double mean_sat, double gamma);

// Windowed min over channels of I^c / A^c, clamped to [0, 1].
ScalarMap dark_channel(const Image& img, const AtmosphericLight& a, const VbmConfig& cfg);

// t = max(1 - w * dark, t_floor).
ScalarMap transmission(const ScalarMap& dark, double w, const VbmConfig& cfg);

// Scene radiance J = (I - A * (1 - t)) / t, clamped to [0, 1].
Image recover(const Image& img, const ScalarMap& t, const AtmosphericLight& a);

struct BoostStats {
  bool night = false;        // inverse switch taken
  double mean_sat_before = 0.0;
  double mean_sat_after = 0.0;
  double omega = 0.0;        // modulation coefficient actually applied
};

// Full visibility-boost pipeline: conditional inversion for low-light
// inputs, saturation-modulated transmission, scatter-model recovery,
// and the matching inversion on the way out.
Image boost(const Image& img, const VbmConfig& cfg);
Image boost(const Image& img, const VbmConfig& cfg, BoostStats& stats);

}  // namespace vblc
