#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vblc/image.hpp"
#include "vblc/loss.hpp"
#include "vblc/model.hpp"

namespace vblc {

struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::uint64_t> counts;  // row = ground truth, col = prediction

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k)
      : classes(k), counts(static_cast<std::size_t>(k) * k, 0) {}

  std::uint64_t& at(int gt, int pred) {
    return counts[static_cast<std::size_t>(gt) * classes + pred];
  }
  std::uint64_t at(int gt, int pred) const {
    return counts[static_cast<std::size_t>(gt) * classes + pred];
  }
  std::uint64_t total() const;
};

// Ignore-sentinel ground-truth pixels are skipped; any other id >= K throws.
void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionMatrix& cm);

struct IouReport {
  std::vector<std::optional<double>> per_class;  // nullopt = class absent
  double mean = 0.0;
};

// IoU_c = TP / (TP + FP + FN); zero-union classes are excluded from the
// mean. Throws when every class is absent.
IouReport miou(const ConfusionMatrix& cm);

struct ConfidenceHistogram {
  int bins = 0;
  std::vector<std::uint64_t> counts_all;
  std::vector<std::uint64_t> counts_erroneous;
};

// Per-pixel confidence = max softmax probability (optionally of the
// norm-scaled logits), binned over [0, 1] for all pixels and for the
// mispredicted ones.
ConfidenceHistogram confidence_report(std::span<const LogitMap> logit_maps,
                                      std::span<const LabelMap> gt_maps, int bins,
                                      bool use_norm, const LossConfig& cfg = {});

// Plain argmax inference, lowest index wins ties.
LabelMap predict_labels(const LogitMap& logits);

struct EvalReport {
  IouReport iou;
  ConfidenceHistogram histogram;
  int images = 0;
  std::uint64_t pixels = 0;
};

EvalReport evaluate_model(const ModelParams& params, std::span<const Image> images,
                          std::span<const LabelMap> labels, int bins = 20);

// Directory-driven evaluation; writes per-class IoU, mIoU and the
// confidence histograms as CSV sections.
EvalReport evaluate(const std::filesystem::path& checkpoint,
                    const std::filesystem::path& image_dir,
                    const std::filesystem::path& label_dir,
                    const std::filesystem::path& out_csv);

}  // namespace vblc
