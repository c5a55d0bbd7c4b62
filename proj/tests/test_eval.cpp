#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vblc/errors.hpp"
#include "vblc/eval.hpp"
#include "vblc/rng.hpp"
#include "vblc/synth.hpp"
#include "vblc/trainer.hpp"
#include "test_util.hpp"

using namespace vblc;
namespace fs = std::filesystem;

TEST_CASE("confusion accumulation") {
  SUBCASE("perfect prediction fills the diagonal") {
    LabelMap gt(2, 3);
    for (int i = 0; i < 6; ++i) gt.data[i] = static_cast<std::uint8_t>(i % 3);
    ConfusionMatrix cm(3);
    accumulate(gt, gt, cm);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(cm.at(i, j) == (i == j ? 2u : 0u));
      }
    }
  }
  SUBCASE("ignored ground truth leaves the matrix unchanged") {
    LabelMap gt(2, 2, LabelMap::kIgnoreId);
    LabelMap pred(2, 2, 1);
    ConfusionMatrix cm(3);
    accumulate(pred, gt, cm);
    CHECK(cm.total() == 0);
  }
  SUBCASE("handcrafted 2x2 maps tally exactly") {
    LabelMap gt(2, 2);
    gt.data = {0, 1, 1, 2};
    LabelMap pred(2, 2);
    pred.data = {0, 1, 2, 2};
    ConfusionMatrix cm(3);
    accumulate(pred, gt, cm);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(1, 2) == 1);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);
  }
  SUBCASE("out-of-range ids are rejected") {
    LabelMap gt(1, 1, 5);
    LabelMap pred(1, 1, 0);
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(accumulate(pred, gt, cm), ValidationError);
  }
}

TEST_CASE("mIoU") {
  SUBCASE("perfect prediction scores one") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 10;
    cm.at(1, 1) = 5;
    cm.at(2, 2) = 7;
    const IouReport r = miou(cm);
    for (const auto& iou : r.per_class) {
      REQUIRE(iou.has_value());
      CHECK(*iou == 1.0);
    }
    CHECK(r.mean == 1.0);
  }
  SUBCASE("disjoint prediction scores zero") {
    ConfusionMatrix cm(2);
    cm.at(0, 1) = 4;
    cm.at(1, 0) = 4;
    const IouReport r = miou(cm);
    CHECK(*r.per_class[0] == 0.0);
    CHECK(*r.per_class[1] == 0.0);
  }
  SUBCASE("two-class worked example") {
    // gt = [0,0,1,1], pred = [0,1,1,1]
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 1;
    cm.at(0, 1) = 1;
    cm.at(1, 1) = 2;
    const IouReport r = miou(cm);
    CHECK(*r.per_class[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(*r.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.mean == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  }
  SUBCASE("absent classes are excluded from the mean") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 4;
    cm.at(1, 1) = 4;
    const IouReport r = miou(cm);
    CHECK_FALSE(r.per_class[2].has_value());
    CHECK(r.mean == 1.0);
  }
  SUBCASE("an empty matrix has no score") {
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(miou(cm), ValidationError);
  }
}

TEST_CASE("mIoU matches a brute-force recomputation") {
  Rng rng(321);
  ConfusionMatrix incremental(5);
  std::vector<std::uint8_t> all_gt, all_pred;
  for (int pair = 0; pair < 10; ++pair) {
    LabelMap gt(6, 6), pred(6, 6);
    for (int i = 0; i < 36; ++i) {
      gt.data[i] = rng.below(8) < 1 ? LabelMap::kIgnoreId
                                    : static_cast<std::uint8_t>(rng.below(5));
      pred.data[i] = static_cast<std::uint8_t>(rng.below(5));
    }
    accumulate(pred, gt, incremental);
    for (int i = 0; i < 36; ++i) {
      all_gt.push_back(gt.data[i]);
      all_pred.push_back(pred.data[i]);
    }
  }
  // independent recount over the concatenated arrays
  ConfusionMatrix brute(5);
  for (std::size_t i = 0; i < all_gt.size(); ++i) {
    if (all_gt[i] == LabelMap::kIgnoreId) continue;
    ++brute.at(all_gt[i], all_pred[i]);
  }
  CHECK(incremental.counts == brute.counts);
  CHECK(miou(incremental).mean == miou(brute).mean);
}

TEST_CASE("confidence histograms") {
  SUBCASE("uniform logits put everything at 1/K") {
    LogitMap z(4, 4, 5, 0.0);
    LabelMap gt(4, 4, 0);
    const ConfidenceHistogram h =
        confidence_report(std::span(&z, 1), std::span(&gt, 1), 20, false);
    // confidence 0.2 lands in bin 4
    for (int b = 0; b < 20; ++b) {
      CHECK(h.counts_all[static_cast<std::size_t>(b)] == (b == 4 ? 16u : 0u));
    }
  }
  SUBCASE("perfect confident predictions have no erroneous counts") {
    LogitMap z(4, 4, 3, 0.0);
    LabelMap gt(4, 4, 1);
    for (int i = 0; i < 16; ++i) z.pixel(i)[1] = 30.0;
    const ConfidenceHistogram h =
        confidence_report(std::span(&z, 1), std::span(&gt, 1), 20, false);
    for (auto v : h.counts_erroneous) CHECK(v == 0);
    CHECK(h.counts_all[19] == 16);
  }
  SUBCASE("constructed 30% errors at 0.99 confidence fill the top bin") {
    const int n = 100;
    LogitMap z(10, 10, 2, 0.0);
    LabelMap gt(10, 10, 0);
    const double a = std::log(99.0);  // softmax -> 0.99
    for (int i = 0; i < n; ++i) {
      z.pixel(i)[0] = a;
      if (i < 30) gt.data[i] = 1;  // wrong label for the first 30 pixels
    }
    const ConfidenceHistogram h =
        confidence_report(std::span(&z, 1), std::span(&gt, 1), 20, false);
    CHECK(h.counts_all[19] == 100);
    CHECK(h.counts_erroneous[19] == 30);
  }
  SUBCASE("erroneous never exceeds all") {
    Rng rng(111);
    LogitMap z(8, 8, 4);
    for (double& v : z.data) v = rng.uniform(-5.0, 5.0);
    LabelMap gt(8, 8);
    for (auto& v : gt.data) v = static_cast<std::uint8_t>(rng.below(4));
    const ConfidenceHistogram h =
        confidence_report(std::span(&z, 1), std::span(&gt, 1), 20, false);
    std::uint64_t total = 0;
    for (int b = 0; b < 20; ++b) {
      CHECK(h.counts_erroneous[b] <= h.counts_all[b]);
      total += h.counts_all[b];
    }
    CHECK(total == 64);
  }
}

TEST_CASE("a trained model nails its own source split") {
  // tiny end-to-end smoke: train source-only long enough to overfit
  SceneSpec spec;
  spec.height = 24;
  spec.width = 24;
  spec.seed = 77;
  std::vector<TrainSample> sources;
  std::vector<Image> images;
  std::vector<LabelMap> labels;
  for (int i = 0; i < 8; ++i) {
    Rng rng(Rng::derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    Scene s = gen_scene(spec, rng);
    sources.push_back({s.clean, s.labels});
    images.push_back(s.clean);
    labels.push_back(s.labels);
  }

  TrainConfig cfg;
  cfg.ablation = Ablation::kSourceOnly;
  cfg.batch = 4;
  cfg.lr = 0.5;
  cfg.seed = 3;
  TrainState state = make_train_state(cfg, kSynthClasses);
  Rng sampler(42);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<TrainSample> batch;
    for (int b = 0; b < cfg.batch; ++b) {
      batch.push_back(sources[sampler.below(sources.size())]);
    }
    train_step(state, batch, {}, cfg);
  }
  const EvalReport report = evaluate_model(state.student, images, labels);
  CHECK(report.iou.mean >= 0.8);
}

TEST_CASE("evaluate() writes a deterministic report") {
  const fs::path root = fs::temp_directory_path() / "vblc_eval_test";
  fs::remove_all(root);
  fs::create_directories(root);

  SceneSpec spec;
  spec.height = 24;
  spec.width = 24;
  spec.seed = 55;
  gen_dataset(spec, {4, 4}, root / "data");

  Rng rng(9);
  const ModelParams params = init_params(kFeatureDim, 16, kSynthClasses, rng);
  save_checkpoint(root / "model.bin", params);

  const EvalReport a = evaluate(root / "model.bin", root / "data/target",
                                root / "data/target_labels", root / "report_a.csv");
  const EvalReport b = evaluate(root / "model.bin", root / "data/target",
                                root / "data/target_labels", root / "report_b.csv");
  CHECK(a.images == 4);
  CHECK(a.pixels == 4u * 24 * 24);
  CHECK(a.iou.mean == b.iou.mean);

  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  const std::string report = read(root / "report_a.csv");
  CHECK(report == read(root / "report_b.csv"));
  CHECK(report.find("section,key,value") == 0);
  CHECK(report.find("miou,,") != std::string::npos);
  CHECK(report.find("hist_all,bin_0,") != std::string::npos);
  CHECK(report.find("hist_erroneous,bin_19,") != std::string::npos);

  SUBCASE("missing labels abort with the file name") {
    try {
      evaluate(root / "model.bin", root / "data/target", root / "data", root / "x.csv");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(".pgm") != std::string::npos);
    }
  }
  SUBCASE("empty image dir aborts") {
    fs::create_directories(root / "empty");
    CHECK_THROWS_AS(
        evaluate(root / "model.bin", root / "empty", root / "data/target_labels",
                 root / "y.csv"),
        ValidationError);
  }
  fs::remove_all(root);
}
