#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "vblc/errors.hpp"
#include "vblc/pnm.hpp"
#include "vblc/synth.hpp"
#include "test_util.hpp"

using namespace vblc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("gen_scene determinism and structure") {
  SceneSpec spec;
  Rng a(Rng::derive_seed(spec.seed, 0));
  Rng b(Rng::derive_seed(spec.seed, 0));
  const Scene s1 = gen_scene(spec, a);
  const Scene s2 = gen_scene(spec, b);
  CHECK(s1.clean.data == s2.clean.data);
  CHECK(s1.labels.data == s2.labels.data);
  CHECK(s1.depth.data == s2.depth.data);

  SUBCASE("depth stays in range") {
    for (double v : s1.depth.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  SUBCASE("labels and colors stay coupled") {
    // every painted label carries exactly one scene color
    std::map<int, std::set<std::array<double, 3>>> colors;
    for (int i = 0; i < s1.labels.height * s1.labels.width; ++i) {
      colors[s1.labels.data[i]].insert(
          {s1.clean.data[i * 3], s1.clean.data[i * 3 + 1], s1.clean.data[i * 3 + 2]});
    }
    for (const auto& [cls, palette] : colors) {
      CAPTURE(cls);
      CHECK(palette.size() == 1);
    }
    CHECK(colors.count(0) == 1);  // background always present
  }
}

TEST_CASE("zero shapes renders pure background") {
  SceneSpec spec;
  spec.min_shapes = 0;
  spec.max_shapes = 0;
  Rng rng(1);
  const Scene s = gen_scene(spec, rng);
  for (std::uint8_t id : s.labels.data) CHECK(id == 0);
}

TEST_CASE("label histogram matches a brute-force recount") {
  SceneSpec spec;
  Rng rng(Rng::derive_seed(33, 5));
  const Scene s = gen_scene(spec, rng);
  std::array<int, kSynthClasses> histogram{};
  for (std::uint8_t id : s.labels.data) ++histogram[id];
  int total = 0;
  for (int c = 0; c < kSynthClasses; ++c) total += histogram[c];
  CHECK(total == s.labels.height * s.labels.width);
}

TEST_CASE("fog synthesis") {
  SceneSpec spec;
  Rng rng(Rng::derive_seed(44, 0));
  const Scene s = gen_scene(spec, rng);
  SUBCASE("zero scattering returns the clean image") {
    FogParams p;
    p.beta = 0.0;
    p.light = {0.9, 0.9, 0.9};
    CHECK(apply_fog(s.clean, s.depth, p).data == s.clean.data);
  }
  SUBCASE("zero depth returns the clean image") {
    const ScalarMap flat(spec.height, spec.width, 0.0);
    FogParams p;
    p.beta = 2.0;
    p.light = {0.9, 0.9, 0.9};
    CHECK(apply_fog(s.clean, flat, p).data == s.clean.data);
  }
  SUBCASE("black scene under unit depth and ln2 scattering turns half-white") {
    Image black(4, 4, 0.0);
    const ScalarMap ones(4, 4, 1.0);
    FogParams p;
    p.beta = std::log(2.0);
    p.light = {1.0, 1.0, 1.0};
    const Image out = apply_fog(black, ones, p);
    for (double v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("low-light synthesis") {
  SceneSpec spec;
  Rng rng(Rng::derive_seed(45, 0));
  const Scene s = gen_scene(spec, rng);
  SUBCASE("zero veil returns the clean image") {
    NightParams p;
    p.veil_beta = 0.0;
    p.dark_light = {0.9, 0.9, 0.9};
    const Image out = apply_lowlight(s.clean, s.depth, p);
    CHECK(testutil::max_abs_diff(out.data, s.clean.data) <= 1e-15);
  }
  SUBCASE("all-white scene darkens to the transmission") {
    Image white(4, 4, 1.0);
    ScalarMap depth(4, 4);
    for (int i = 0; i < 16; ++i) depth.data[i] = i / 15.0;
    NightParams p;
    p.veil_beta = 1.5;
    p.dark_light = {1.0, 1.0, 1.0};
    const Image out = apply_lowlight(white, depth, p);
    for (int i = 0; i < 16; ++i) {
      const double t = std::exp(-1.5 * depth.data[i]);
      CHECK(out.data[i * 3] == doctest::Approx(t).epsilon(1e-12));
    }
  }
}

TEST_CASE("degradations lower saturation or luminance across scenes") {
  SceneSpec spec;
  spec.height = 48;
  spec.width = 48;
  int sat_drop = 0;
  int lum_drop = 0;
  const int scenes = 100;
  for (int i = 0; i < scenes; ++i) {
    Rng rng(Rng::derive_seed(500, static_cast<std::uint64_t>(i)));
    const Scene s = gen_scene(spec, rng);
    FogParams fog;
    fog.beta = rng.uniform(0.5, 3.0);
    fog.light = {rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)};
    if (mean_saturation(apply_fog(s.clean, s.depth, fog)) < mean_saturation(s.clean)) {
      ++sat_drop;
    }
    NightParams night;
    night.veil_beta = rng.uniform(2.0, 3.5);
    night.dark_light = {rng.uniform(0.88, 1.0), rng.uniform(0.88, 1.0),
                        rng.uniform(0.88, 1.0)};
    if (mean_luminance(apply_lowlight(s.clean, s.depth, night)) < mean_luminance(s.clean)) {
      ++lum_drop;
    }
  }
  CHECK(sat_drop == scenes);
  CHECK(lum_drop == scenes);
}

TEST_CASE("gen_dataset writes the expected tree deterministically") {
  const fs::path dir_a = fs::temp_directory_path() / "vblc_synth_a";
  const fs::path dir_b = fs::temp_directory_path() / "vblc_synth_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  SceneSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.seed = 99;
  DatasetCounts counts{10, 10};
  const auto manifest_a = gen_dataset(spec, counts, dir_a);
  const auto manifest_b = gen_dataset(spec, counts, dir_b);

  CHECK(manifest_a.size() == 40);  // every file has a row

  int source_ppm = 0, source_pgm = 0, target_ppm = 0, target_pgm = 0;
  for (const auto& entry : fs::directory_iterator(dir_a / "source")) {
    if (entry.path().extension() == ".ppm") ++source_ppm;
    if (entry.path().extension() == ".pgm") ++source_pgm;
  }
  for (const auto& entry : fs::directory_iterator(dir_a / "target")) {
    if (entry.path().extension() == ".ppm") ++target_ppm;
    CHECK(entry.path().extension() != ".pgm");
  }
  for (const auto& entry : fs::directory_iterator(dir_a / "target_labels")) {
    if (entry.path().extension() == ".pgm") ++target_pgm;
  }
  CHECK(source_ppm == 10);
  CHECK(source_pgm == 10);
  CHECK(target_ppm == 10);
  CHECK(target_pgm == 10);

  int fog = 0, night = 0;
  for (const auto& row : manifest_a) {
    if (row.split == "target" && row.condition == "fog") ++fog;
    if (row.split == "target" && row.condition == "night") ++night;
  }
  CHECK(fog == 5);
  CHECK(night == 5);

  // byte-identical regeneration, manifest included
  for (const auto& row : manifest_a) {
    CHECK(slurp(dir_a / row.file) == slurp(dir_b / row.file));
  }
  CHECK(slurp(dir_a / "manifest.csv") == slurp(dir_b / "manifest.csv"));

  SUBCASE("target labels match the regenerated scene labels") {
    Rng rng(Rng::derive_seed(99, 10));  // first target scene index = source_n
    const Scene scene = gen_scene(spec, rng);
    const LabelMap withheld = read_pgm(dir_a / "target_labels/scene_0000.pgm", kSynthClasses);
    CHECK(withheld.data == scene.labels.data);
  }

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}
