#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vblc/image.hpp"
#include "vblc/rng.hpp"
#include "vblc/vbm.hpp"

namespace vblc {

// Classes: 0 background, 1 circle, 2 rectangle, 3 triangle, 4 stripe.
inline constexpr int kSynthClasses = 5;

struct SceneSpec {
  int height = 64;
  int width = 64;
  int min_shapes = 3;
  int max_shapes = 6;
  double color_jitter = 0.13;  // per-scene palette perturbation
  std::uint64_t seed = 7;
};

struct FogParams {
  double beta = 1.0;          // scattering per unit depth
  AtmosphericLight light;     // near-white airlight
};

struct NightParams {
  double veil_beta = 2.5;     // scattering applied in inverted space
  AtmosphericLight dark_light;
};

struct Scene {
  Image clean;
  LabelMap labels;
  ScalarMap depth;  // in [0, 1]
};

// Jittered colored shapes over a background, exact labels, and a smooth
// depth gradient with per-shape offsets.
Scene gen_scene(const SceneSpec& spec, Rng& rng);

// I = J * t + A * (1 - t) with t = e^(-beta * depth), clamped to [0, 1].
Image apply_fog(const Image& clean, const ScalarMap& depth, const FogParams& p);

// Low-light synthesis: fog the inverted image, then invert back.
Image apply_lowlight(const Image& clean, const ScalarMap& depth, const NightParams& p);

struct DatasetCounts {
  int source_n = 200;
  int target_n = 200;
};

struct ManifestRow {
  std::string file;
  std::string split;      // source | source_label | target | target_label
  std::string condition;  // clean | fog | night
  double beta = 0.0;
  double light_r = 1.0, light_g = 1.0, light_b = 1.0;
};

// Writes source PPM+PGM pairs, adverse target PPMs (half fog, half
// night), held-out target labels in a separate folder, and manifest.csv.
// Returns the manifest rows, one per file written.
std::vector<ManifestRow> gen_dataset(const SceneSpec& spec, const DatasetCounts& counts,
                                     const std::filesystem::path& out_dir);

}  // namespace vblc
