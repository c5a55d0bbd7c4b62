#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vblc/image.hpp"
#include "vblc/loss.hpp"
#include "vblc/model.hpp"
#include "vblc/rng.hpp"
#include "vblc/vbm.hpp"

namespace vblc {

// Training variants used by the ablation study.
enum class Ablation {
  kSourceOnly,      // supervised CE on source only
  kCeSelfTraining,  // + CE self-training on raw-target mixes
  kVbmCe,           // + visibility boost, CE losses
  kFullVblc,        // + logit-constraint losses
};

struct TrainConfig {
  double delta = 0.9;     // pseudo-label confidence threshold
  double alpha = 0.999;   // teacher EMA ratio
  int max_iters = 2000;
  int batch = 4;          // (source, target) pairs per step
  double lr = 0.5;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  Ablation ablation = Ablation::kFullVblc;
  VbmConfig vbm;
  LossConfig loss;
};

struct TrainState {
  ModelParams student;
  ModelParams teacher;
  int iter = 0;
  ParamGrad velocity;
  Rng rng{0};
};

// Student init (seeded from cfg.seed), teacher starts as a copy.
TrainState make_train_state(const TrainConfig& cfg, int classes);

// Teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
void ema_update(ModelParams& teacher, const ModelParams& student, double alpha);

struct PseudoLabelResult {
  LabelMap labels;   // per-pixel argmax, no pixel discarded
  double lambda = 0.0;  // fraction of pixels with max softmax prob > delta
};

PseudoLabelResult pseudo_label_from_logits(const LogitMap& logits, double delta);
PseudoLabelResult pseudo_label(const ModelParams& teacher, const Image& boosted,
                               double delta);

struct MixResult {
  Image mixed_image;
  LabelMap mixed_label;
  ScalarMap mask;  // 1 = source pixel, 0 = target pixel
};

// Distinct non-ignored class ids in the map, ascending.
std::vector<std::uint8_t> classes_present(const LabelMap& labels);

// Uniformly chosen ceil(n/2) of the classes present in src.
std::vector<std::uint8_t> sample_class_subset(const LabelMap& src, Rng& rng);

ScalarMap class_mask(const LabelMap& src, std::span<const std::uint8_t> classes);

Image composite(const ScalarMap& mask, const Image& src, const Image& tgt);
LabelMap composite_labels(const ScalarMap& mask, const LabelMap& src, const LabelMap& tgt);

// ClassMix: paste the pixels of half the source classes onto the target.
MixResult classmix(const Image& src_img, const LabelMap& src_label, const Image& tgt_img,
                   const LabelMap& tgt_label, Rng& rng);
MixResult classmix_with_classes(const Image& src_img, const LabelMap& src_label,
                                const Image& tgt_img, const LabelMap& tgt_label,
                                std::span<const std::uint8_t> classes);

struct StepMetrics {
  double loss_src = 0.0;
  double loss_t_mix = 0.0;  // lambda-weighted mixed raw-target loss
  double loss_b_mix = 0.0;  // lambda-weighted mixed boosted-target loss
  double lambda = 0.0;
};

struct TrainSample {
  Image image;
  LabelMap labels;
};

// One optimizer step: EMA update, boost, pseudo-labeling, ClassMix of
// both raw and boosted targets against the same class mask, and the
// three-term objective averaged over the batch.
StepMetrics train_step(TrainState& state, std::span<const TrainSample> src_batch,
                       std::span<const Image> tgt_batch, const TrainConfig& cfg);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_csv;
  std::filesystem::path manifest;
  std::vector<StepMetrics> metrics;
  int classes = 0;
};

// Full run over PPM/PGM directories; writes run_manifest.txt,
// metrics.csv and checkpoint.bin into out_dir.
TrainOutputs train(const TrainConfig& cfg, const std::filesystem::path& source_dir,
                   const std::filesystem::path& target_dir,
                   const std::filesystem::path& out_dir);

const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

}  // namespace vblc
