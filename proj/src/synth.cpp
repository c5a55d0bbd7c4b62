#include "vblc/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vblc/errors.hpp"
#include "vblc/pnm.hpp"

namespace vblc {

namespace {

struct Rgb {
  double r, g, b;
};

// Base palette: a dull background and four saturated shape classes.
constexpr Rgb kPalette[kSynthClasses] = {
    {0.46, 0.47, 0.44},  // background
    {0.80, 0.22, 0.20},  // circle
    {0.20, 0.68, 0.26},  // rectangle
    {0.22, 0.32, 0.82},  // triangle
    {0.78, 0.72, 0.18},  // stripe
};

Rgb jitter_color(const Rgb& base, double amp, Rng& rng) {
  auto j = [&](double v) {
    v += rng.uniform(-amp, amp);
    return v < 0.02 ? 0.02 : (v > 0.98 ? 0.98 : v);
  };
  return {j(base.r), j(base.g), j(base.b)};
}

void paint(Scene& scene, int y, int x, const Rgb& color, std::uint8_t cls, double depth_off) {
  scene.clean.at(y, x, 0) = color.r;
  scene.clean.at(y, x, 1) = color.g;
  scene.clean.at(y, x, 2) = color.b;
  scene.labels.at(y, x) = cls;
  scene.depth.at(y, x) = clamp01(scene.depth.at(y, x) + depth_off);
}

}  // namespace

Scene gen_scene(const SceneSpec& spec, Rng& rng) {
  const int h = spec.height;
  const int w = spec.width;
  Scene scene;
  scene.clean = Image(h, w);
  scene.labels = LabelMap(h, w, 0);
  scene.depth = ScalarMap(h, w);

  Rgb colors[kSynthClasses];
  for (int c = 0; c < kSynthClasses; ++c) {
    colors[c] = jitter_color(kPalette[c], spec.color_jitter, rng);
  }

  const double d_top = rng.uniform(0.05, 0.35);
  const double d_bot = rng.uniform(0.65, 1.0);
  for (int y = 0; y < h; ++y) {
    const double d = d_top + (d_bot - d_top) * (h > 1 ? static_cast<double>(y) / (h - 1) : 0.0);
    for (int x = 0; x < w; ++x) {
      scene.depth.at(y, x) = d;
      scene.clean.at(y, x, 0) = colors[0].r;
      scene.clean.at(y, x, 1) = colors[0].g;
      scene.clean.at(y, x, 2) = colors[0].b;
    }
  }

  // shape extents scale down with the canvas so everything fits
  const int side = std::min(h, w);
  const int shape_count = rng.uniform_int(spec.min_shapes, spec.max_shapes);
  for (int s = 0; s < shape_count; ++s) {
    const int cls = rng.uniform_int(1, 4);
    const double depth_off = rng.uniform(-0.25, 0.25);
    const Rgb& color = colors[cls];
    switch (cls) {
      case 1: {  // circle
        const int r_hi = std::min(11, (side - 2) / 2);
        const int r = rng.uniform_int(std::min(5, r_hi), r_hi);
        const int cx = rng.uniform_int(r, w - 1 - r);
        const int cy = rng.uniform_int(r, h - 1 - r);
        for (int y = cy - r; y <= cy + r; ++y) {
          for (int x = cx - r; x <= cx + r; ++x) {
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) {
              paint(scene, y, x, color, 1, depth_off);
            }
          }
        }
        break;
      }
      case 2: {  // rectangle
        const int rw = rng.uniform_int(std::min(8, w / 2), std::min(22, w));
        const int rh = rng.uniform_int(std::min(8, h / 2), std::min(22, h));
        const int x0 = rng.uniform_int(0, w - rw);
        const int y0 = rng.uniform_int(0, h - rh);
        for (int y = y0; y < y0 + rh; ++y) {
          for (int x = x0; x < x0 + rw; ++x) paint(scene, y, x, color, 2, depth_off);
        }
        break;
      }
      case 3: {  // isoceles triangle, apex up
        const int bw = rng.uniform_int(std::min(10, w / 2), std::min(24, w - 2));
        const int th = rng.uniform_int(std::min(8, h / 2), std::min(20, h - 2));
        const int half = bw / 2;
        const int ax = rng.uniform_int(half, w - 1 - half);
        const int ay = rng.uniform_int(0, h - 1 - th);
        for (int y = ay; y <= ay + th; ++y) {
          const double span = static_cast<double>(half) * (y - ay) / th;
          for (int x = ax - static_cast<int>(span); x <= ax + static_cast<int>(span); ++x) {
            paint(scene, y, x, color, 3, depth_off);
          }
        }
        break;
      }
      default: {  // stripe: band through a random point at a random angle
        const double angle = rng.uniform(0.0, 3.14159265358979323846);
        const double px = rng.uniform(0.0, static_cast<double>(w));
        const double py = rng.uniform(0.0, static_cast<double>(h));
        const double thick = rng.uniform(2.5, 5.5);
        const double nx = std::cos(angle);
        const double ny = std::sin(angle);
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (std::abs(nx * (x - px) + ny * (y - py)) <= thick) {
              paint(scene, y, x, color, 4, depth_off);
            }
          }
        }
        break;
      }
    }
  }
  return scene;
}

Image apply_fog(const Image& clean, const ScalarMap& depth, const FogParams& p) {
  Image out(clean.height, clean.width);
  const int n = clean.pixel_count();
  for (int i = 0; i < n; ++i) {
    const double t = std::exp(-p.beta * depth.data[i]);
    out.data[i * 3 + 0] = clamp01(clean.data[i * 3 + 0] * t + p.light.r * (1.0 - t));
    out.data[i * 3 + 1] = clamp01(clean.data[i * 3 + 1] * t + p.light.g * (1.0 - t));
    out.data[i * 3 + 2] = clamp01(clean.data[i * 3 + 2] * t + p.light.b * (1.0 - t));
  }
  return out;
}

Image apply_lowlight(const Image& clean, const ScalarMap& depth, const NightParams& p) {
  FogParams veil;
  veil.beta = p.veil_beta;
  veil.light = p.dark_light;
  return invert(apply_fog(invert(clean), depth, veil));
}

std::vector<ManifestRow> gen_dataset(const SceneSpec& spec, const DatasetCounts& counts,
                                     const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"source", "target", "target_labels"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }

  std::vector<ManifestRow> manifest;
  char name[64];

  for (int i = 0; i < counts.source_n; ++i) {
    Rng rng(Rng::derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const Scene scene = gen_scene(spec, rng);
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    const std::string ppm = std::string("source/") + name + ".ppm";
    const std::string pgm = std::string("source/") + name + ".pgm";
    write_ppm(out_dir / ppm, scene.clean);
    write_pgm(out_dir / pgm, scene.labels);
    manifest.push_back({ppm, "source", "clean", 0.0, 1.0, 1.0, 1.0});
    manifest.push_back({pgm, "source_label", "clean", 0.0, 1.0, 1.0, 1.0});
  }

  for (int j = 0; j < counts.target_n; ++j) {
    const std::uint64_t index = static_cast<std::uint64_t>(counts.source_n) + j;
    Rng rng(Rng::derive_seed(spec.seed, index));
    const Scene scene = gen_scene(spec, rng);
    std::snprintf(name, sizeof(name), "scene_%04d", j);
    const std::string ppm = std::string("target/") + name + ".ppm";
    const std::string pgm = std::string("target_labels/") + name + ".pgm";

    Image adverse;
    ManifestRow row;
    if (j % 2 == 0) {
      FogParams p;
      p.beta = rng.uniform(0.5, 2.2);
      p.light = {rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)};
      adverse = apply_fog(scene.clean, scene.depth, p);
      row = {ppm, "target", "fog", p.beta, p.light.r, p.light.g, p.light.b};
    } else {
      NightParams p;
      p.veil_beta = rng.uniform(1.3, 2.6);
      p.dark_light = {rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0)};
      adverse = apply_lowlight(scene.clean, scene.depth, p);
      row = {ppm, "target", "night", p.veil_beta, p.dark_light.r, p.dark_light.g, p.dark_light.b};
    }
    write_ppm(out_dir / ppm, adverse);
    write_pgm(out_dir / pgm, scene.labels);
    manifest.push_back(row);
    ManifestRow label_row = row;
    label_row.file = pgm;
    label_row.split = "target_label";
    manifest.push_back(label_row);
  }

  const fs::path manifest_path = out_dir / "manifest.csv";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot open " + manifest_path.string() + " for writing");
  out << "file,split,condition,beta,light_r,light_g,light_b\n";
  char line[256];
  for (const ManifestRow& r : manifest) {
    std::snprintf(line, sizeof(line), "%s,%s,%s,%.17g,%.17g,%.17g,%.17g\n", r.file.c_str(),
                  r.split.c_str(), r.condition.c_str(), r.beta, r.light_r, r.light_g, r.light_b);
    out << line;
  }
  if (!out) throw IoError("write failed on " + manifest_path.string());
  return manifest;
}

}  // namespace vblc
