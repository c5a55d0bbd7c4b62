#include <doctest.h>

#include <cmath>

#include "vblc/pnm.hpp"
#include "vblc/rng.hpp"
#include "vblc/synth.hpp"
#include "vblc/vbm.hpp"
#include "test_util.hpp"

using namespace vblc;

TEST_CASE("atmospheric light estimation") {
  VbmConfig cfg;
  SUBCASE("uniform image") {
    Image img(4, 4, 0.6);
    const AtmosphericLight a = estimate_atmospheric_light(img, cfg);
    CHECK(a.r == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.g == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.b == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("single white pixel with sample count 1") {
    Image img(3, 3, 0.1);
    for (int c = 0; c < 3; ++c) img.at(1, 2, c) = 1.0;
    cfg.light_sample_count = 1;
    const AtmosphericLight a = estimate_atmospheric_light(img, cfg);
    CHECK(a.r == 1.0);
    CHECK(a.g == 1.0);
    CHECK(a.b == 1.0);
  }
  SUBCASE("two-pixel average") {
    Image img(1, 2, 0.0);
    for (int c = 0; c < 3; ++c) img.at(0, 0, c) = 1.0;
    cfg.light_sample_count = 2;
    const AtmosphericLight a = estimate_atmospheric_light(img, cfg);
    CHECK(a.r == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("all-black input is floored away from zero") {
    Image img(2, 2, 0.0);
    const AtmosphericLight a = estimate_atmospheric_light(img, cfg);
    CHECK(a.r == 1e-3);
    CHECK(a.g == 1e-3);
    CHECK(a.b == 1e-3);
  }
  SUBCASE("layout-independent given distinct luminances") {
    Rng rng(51);
    Image img(2, 3);
    for (int i = 0; i < 6; ++i) {
      const double base = 0.1 + 0.14 * i;
      for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = base + 0.01 * c;
    }
    Image permuted(3, 2);
    const int order[6] = {4, 2, 0, 5, 1, 3};
    for (int i = 0; i < 6; ++i) {
      for (int c = 0; c < 3; ++c) permuted.data[i * 3 + c] = img.data[order[i] * 3 + c];
    }
    cfg.light_sample_count = 3;
    const AtmosphericLight a = estimate_atmospheric_light(img, cfg);
    const AtmosphericLight b = estimate_atmospheric_light(permuted, cfg);
    CHECK(a.r == b.r);
    CHECK(a.g == b.g);
    CHECK(a.b == b.b);
  }
}

TEST_CASE("omega_s values") {
  CHECK(omega_s(0.0, 4.0) == 1.0);
  CHECK(omega_s(0.25, 4.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(omega_s(1.0, 4.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
  CHECK(omega_s(0.5, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("dark channel") {
  VbmConfig cfg;
  SUBCASE("image equal to the airlight is all ones") {
    Image img(5, 5);
    for (int i = 0; i < 25; ++i) {
      img.data[i * 3 + 0] = 0.8;
      img.data[i * 3 + 1] = 0.7;
      img.data[i * 3 + 2] = 0.9;
    }
    const AtmosphericLight a{0.8, 0.7, 0.9};
    const ScalarMap dark = dark_channel(img, a, cfg);
    for (double v : dark.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a zero channel in the window forces zero") {
    Image img(5, 5, 0.6);
    img.at(2, 2, 1) = 0.0;
    cfg.patch_radius = 2;
    const ScalarMap dark = dark_channel(img, {1.0, 1.0, 1.0}, cfg);
    for (double v : dark.data) CHECK(v == 0.0);
  }
  SUBCASE("1x1 image takes the channel minimum") {
    Image img(1, 1);
    img.data = {0.5, 0.6, 0.9};
    const ScalarMap dark = dark_channel(img, {1.0, 1.0, 1.0}, cfg);
    CHECK(dark.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("specular ratios are clamped to one") {
    Image img(1, 1, 0.9);
    const ScalarMap dark = dark_channel(img, {0.5, 0.5, 0.5}, cfg);
    CHECK(dark.at(0, 0) == 1.0);
  }
}

TEST_CASE("transmission") {
  VbmConfig cfg;
  ScalarMap dark(1, 3);
  dark.data = {0.0, 1.0, 0.6};
  SUBCASE("zero dark channel passes everything") {
    const ScalarMap t = transmission(dark, 1.0, cfg);
    CHECK(t.data[0] == 1.0);
  }
  SUBCASE("full veil is floored") {
    const ScalarMap t = transmission(dark, 1.0, cfg);
    CHECK(t.data[1] == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("modulated value") {
    const ScalarMap t = transmission(dark, 0.3679, cfg);
    CHECK(t.data[2] == doctest::Approx(1.0 - 0.3679 * 0.6).epsilon(1e-12));
  }
  SUBCASE("larger omega never raises transmission") {
    Rng rng(3);
    ScalarMap d(4, 4);
    for (double& v : d.data) v = rng.uniform();
    cfg.t_floor = 1e-9;
    const ScalarMap lo = transmission(d, 0.3, cfg);
    const ScalarMap hi = transmission(d, 0.9, cfg);
    for (std::size_t i = 0; i < d.data.size(); ++i) CHECK(hi.data[i] <= lo.data[i]);
  }
}

TEST_CASE("recover") {
  SUBCASE("unit transmission is the identity") {
    Rng rng(7);
    const Image img = testutil::random_image(4, 4, rng);
    const ScalarMap t(4, 4, 1.0);
    const Image j = recover(img, t, {0.9, 0.9, 0.9});
    CHECK(j.data == img.data);
  }
  SUBCASE("algebraic inverse of the scatter model") {
    Rng rng(9);
    const Image j = testutil::random_image(6, 6, rng);
    ScalarMap t(6, 6);
    for (double& v : t.data) v = rng.uniform(0.2, 1.0);
    const AtmosphericLight a{0.95, 0.9, 0.85};
    Image hazy(6, 6);
    for (int i = 0; i < 36; ++i) {
      const double ti = t.data[i];
      hazy.data[i * 3 + 0] = j.data[i * 3 + 0] * ti + a.r * (1.0 - ti);
      hazy.data[i * 3 + 1] = j.data[i * 3 + 1] * ti + a.g * (1.0 - ti);
      hazy.data[i * 3 + 2] = j.data[i * 3 + 2] * ti + a.b * (1.0 - ti);
    }
    const Image back = recover(hazy, t, a);
    CHECK(testutil::max_abs_diff(back.data, j.data) <= 1e-6);
  }
  SUBCASE("veil-only input recovers the airlight") {
    const AtmosphericLight a{0.8, 0.75, 0.7};
    Image img(2, 2);
    for (int i = 0; i < 4; ++i) {
      img.data[i * 3 + 0] = a.r;
      img.data[i * 3 + 1] = a.g;
      img.data[i * 3 + 2] = a.b;
    }
    ScalarMap t(2, 2);
    t.data = {0.2, 0.5, 0.8, 1.0};
    const Image j = recover(img, t, a);
    for (int i = 0; i < 4; ++i) {
      CHECK(j.data[i * 3 + 0] == doctest::Approx(a.r).epsilon(1e-10));
      CHECK(j.data[i * 3 + 1] == doctest::Approx(a.g).epsilon(1e-10));
      CHECK(j.data[i * 3 + 2] == doctest::Approx(a.b).epsilon(1e-10));
    }
  }
}

TEST_CASE("boost pipeline") {
  VbmConfig cfg;
  SUBCASE("uniform gray image passes through unchanged") {
    // A equals the image, so the veil-only recovery returns A itself
    Image img(8, 8, 0.5);
    BoostStats stats;
    const Image out = boost(img, cfg, stats);
    CHECK_FALSE(stats.night);
    CHECK(stats.omega == 1.0);
    for (double v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("fully saturated bright images are near-identity") {
    Rng rng(13);
    Image img(8, 8);
    for (int i = 0; i < 64; ++i) {
      const int hot = static_cast<int>(rng.below(3));
      for (int c = 0; c < 3; ++c) {
        img.data[i * 3 + c] = c == hot ? rng.uniform(0.6, 1.0) : 0.0;
      }
    }
    REQUIRE(mean_saturation(img) == 1.0);
    REQUIRE(mean_luminance(img) >= 0.2);
    cfg.night_luminance_threshold = 0.0;  // force the day path
    BoostStats stats;
    const Image out = boost(img, cfg, stats);
    CHECK(stats.omega == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      CHECK(std::abs(out.data[i] - img.data[i]) <= 0.02);
    }
  }
  SUBCASE("dark inputs route through the inversion path") {
    Rng rng(17);
    Image img(8, 8);
    for (double& v : img.data) v = rng.uniform(0.0, 0.1);
    REQUIRE(mean_luminance(img) < 0.25);
    BoostStats stats;
    const Image out = boost(img, cfg, stats);
    CHECK(stats.night);

    // the switch path is exactly invert(core(invert(img)))
    VbmConfig day = cfg;
    day.night_luminance_threshold = 0.0;
    BoostStats day_stats;
    const Image expected = invert(boost(invert(img), day, day_stats));
    CHECK_FALSE(day_stats.night);
    CHECK(out.data == expected.data);
  }
  SUBCASE("output is always a valid image") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
      const Image img = testutil::random_image(12, 12, rng);
      const Image out = boost(img, cfg);
      for (double v : out.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("boost improves synthetic foggy scenes") {
  VbmConfig cfg;
  SceneSpec spec;
  spec.height = 48;
  spec.width = 48;
  int sat_up = 0;
  int mse_down = 0;
  const int scenes = 20;
  for (int i = 0; i < scenes; ++i) {
    Rng rng(Rng::derive_seed(400, static_cast<std::uint64_t>(i)));
    const Scene scene = gen_scene(spec, rng);
    FogParams fog;
    fog.beta = rng.uniform(0.5, 3.0);
    fog.light = {rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)};
    const Image foggy = apply_fog(scene.clean, scene.depth, fog);
    const Image boosted = boost(foggy, cfg);
    if (mean_saturation(boosted) > mean_saturation(foggy)) ++sat_up;
    if (testutil::mse(boosted, scene.clean) < testutil::mse(foggy, scene.clean)) ++mse_down;
  }
  CHECK(sat_up >= scenes * 9 / 10);
  CHECK(mse_down >= scenes * 9 / 10);
}
