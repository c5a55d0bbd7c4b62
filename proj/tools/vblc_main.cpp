#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vblc/config.hpp"
#include "vblc/errors.hpp"
#include "vblc/eval.hpp"
#include "vblc/gradcheck.hpp"
#include "vblc/pnm.hpp"
#include "vblc/synth.hpp"
#include "vblc/trainer.hpp"
#include "vblc/vbm.hpp"

namespace fs = std::filesystem;

namespace {

constexpr double kGradTolerance = 1e-5;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw vblc::IoError("cannot create " + dir.string() + ": " + ec.message());
}

int run_synth(const fs::path& out, int source_n, int target_n, int size,
              std::uint64_t seed) {
  if (source_n < 1 || target_n < 1) {
    throw vblc::ValidationError("synth: --source-n and --target-n must be >= 1");
  }
  if (size < 16) throw vblc::ValidationError("synth: --size must be >= 16");
  ensure_dir(out);

  vblc::SceneSpec spec;
  spec.height = size;
  spec.width = size;
  spec.seed = seed;

  vblc::TrainConfig manifest_cfg;  // records defaults alongside the synth knobs
  manifest_cfg.seed = seed;
  vblc::write_run_manifest(out / "run_manifest.txt", "synth", manifest_cfg,
                           {{"out", out.string()},
                            {"source_n", std::to_string(source_n)},
                            {"target_n", std::to_string(target_n)},
                            {"size", std::to_string(size)}});

  vblc::DatasetCounts counts{source_n, target_n};
  const auto manifest = vblc::gen_dataset(spec, counts, out);
  std::printf("wrote %zu files under %s\n", manifest.size(), out.string().c_str());
  return 0;
}

int run_enhance(const fs::path& in, const fs::path& out, double gamma, int radius,
                double night_thresh) {
  vblc::VbmConfig cfg;
  cfg.gamma = gamma;
  cfg.patch_radius = radius;
  cfg.night_luminance_threshold = night_thresh;
  if (cfg.gamma <= 0.0) throw vblc::ValidationError("enhance: --gamma must be > 0");
  if (cfg.patch_radius < 0) throw vblc::ValidationError("enhance: --radius must be >= 0");

  std::vector<fs::path> inputs;
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
        inputs.push_back(entry.path());
      }
    }
    std::sort(inputs.begin(), inputs.end());
  } else if (fs::exists(in)) {
    inputs.push_back(in);
  }
  if (inputs.empty()) {
    throw vblc::ValidationError("enhance: no .ppm input at " + in.string());
  }
  ensure_dir(out);

  vblc::TrainConfig manifest_cfg;
  manifest_cfg.vbm = cfg;
  vblc::write_run_manifest(out / "run_manifest.txt", "enhance", manifest_cfg,
                           {{"in", in.string()}, {"out", out.string()}});

  const fs::path csv_path = out / "enhance.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw vblc::IoError("cannot open " + csv_path.string() + " for writing");
  csv << "filename,night_flag,mean_sat_before,mean_sat_after,omega_s\n";
  char line[256];
  for (const fs::path& input : inputs) {
    const vblc::Image img = vblc::read_ppm(input);
    vblc::BoostStats stats;
    const vblc::Image boosted = vblc::boost(img, cfg, stats);
    vblc::write_ppm(out / input.filename(), boosted);
    std::snprintf(line, sizeof(line), "%s,%d,%.17g,%.17g,%.17g\n",
                  input.filename().string().c_str(), stats.night ? 1 : 0,
                  stats.mean_sat_before, stats.mean_sat_after, stats.omega);
    csv << line;
  }
  if (!csv) throw vblc::IoError("write failed on " + csv_path.string());
  std::printf("enhanced %zu images into %s\n", inputs.size(), out.string().c_str());
  return 0;
}

int run_train(const fs::path& source, const fs::path& target, const fs::path& out,
              const std::string& config_path, const std::string& ablation) {
  vblc::TrainConfig cfg;
  if (!config_path.empty()) cfg = vblc::parse_config_file(config_path);
  if (!ablation.empty()) cfg.ablation = vblc::parse_ablation(ablation);
  ensure_dir(out);
  const vblc::TrainOutputs outputs = vblc::train(cfg, source, target, out);
  std::printf("trained %d iterations (%s, %d classes); checkpoint at %s\n", cfg.max_iters,
              vblc::ablation_name(cfg.ablation), outputs.classes,
              outputs.checkpoint.string().c_str());
  return 0;
}

int run_eval(const fs::path& checkpoint, const fs::path& images, const fs::path& labels,
             const fs::path& out_csv) {
  if (out_csv.has_parent_path()) ensure_dir(out_csv.parent_path());
  const vblc::EvalReport report = vblc::evaluate(checkpoint, images, labels, out_csv);
  std::printf("mIoU=%.4f over %d images (%llu pixels); report at %s\n", report.iou.mean,
              report.images, static_cast<unsigned long long>(report.pixels),
              out_csv.string().c_str());
  return 0;
}

int run_gradcheck_cmd(int classes, int trials, std::uint64_t seed) {
  const vblc::GradCheckResult result = vblc::run_gradcheck(classes, trials, seed);
  std::printf("ce_max_rel_err=%.3e\n", result.ce_max_rel_err);
  std::printf("lc_max_rel_err=%.3e\n", result.lc_max_rel_err);
  std::printf("threshold=%.0e\n", kGradTolerance);
  const bool ok =
      result.ce_max_rel_err <= kGradTolerance && result.lc_max_rel_err <= kGradTolerance;
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visibility-boosted self-training for adverse-condition segmentation"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark dataset");
  std::string synth_out;
  int source_n = 200, target_n = 200, size = 64;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--source-n", source_n, "number of labeled clean scenes");
  synth->add_option("--target-n", target_n, "number of unlabeled adverse scenes");
  synth->add_option("--size", size, "square image size in pixels");
  synth->add_option("--seed", synth_seed, "dataset seed");

  // enhance
  auto* enhance = app.add_subcommand("enhance", "visibility-boost images");
  std::string enhance_in, enhance_out;
  double gamma = 4.0, night_thresh = 0.25;
  int radius = 7;
  enhance->add_option("--in", enhance_in, "input .ppm file or directory")->required();
  enhance->add_option("--out", enhance_out, "output directory")->required();
  enhance->add_option("--gamma", gamma, "saturation scaling factor");
  enhance->add_option("--radius", radius, "dark-channel window radius");
  enhance->add_option("--night-thresh", night_thresh, "mean-luminance night threshold");

  // train
  auto* train = app.add_subcommand("train", "run the self-training loop");
  std::string train_source, train_target, train_out, train_config, train_ablation;
  train->add_option("--source", train_source, "labeled source directory (.ppm + .pgm)")
      ->required();
  train->add_option("--target", train_target, "unlabeled target directory (.ppm)")
      ->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--ablation", train_ablation,
                    "training variant: source-only|ce-st|vbm-ce|vblc");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint, eval_images, eval_labels, eval_out;
  eval->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval->add_option("--images", eval_images, "image directory (.ppm)")->required();
  eval->add_option("--labels", eval_labels, "label directory (.pgm)")->required();
  eval->add_option("--out", eval_out, "report CSV path")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "verify loss gradients numerically");
  int gc_classes = 19, gc_trials = 1000;
  std::uint64_t gc_seed = 1;
  gradcheck->add_option("--classes", gc_classes, "number of classes");
  gradcheck->add_option("--trials", gc_trials, "random (logit, label) pairs");
  gradcheck->add_option("--seed", gc_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_out, source_n, target_n, size, synth_seed);
    if (enhance->parsed()) {
      return run_enhance(enhance_in, enhance_out, gamma, radius, night_thresh);
    }
    if (train->parsed()) {
      return run_train(train_source, train_target, train_out, train_config, train_ablation);
    }
    if (eval->parsed()) return run_eval(eval_checkpoint, eval_images, eval_labels, eval_out);
    if (gradcheck->parsed()) return run_gradcheck_cmd(gc_classes, gc_trials, gc_seed);
  } catch (const vblc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const vblc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
