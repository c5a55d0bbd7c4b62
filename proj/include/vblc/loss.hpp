#pragma once

#include <span>
#include <vector>

#include "vblc/image.hpp"

namespace vblc {

struct LossConfig {
  double norm_epsilon = 1e-8;  // guards the ||z|| = 0 singularity
};

// Row-major H x W x K real field of pre-softmax scores.
struct LogitMap {
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<double> data;

  LogitMap() = default;
  LogitMap(int h, int w, int k, double fill = 0.0)
      : height(h), width(w), classes(k),
        data(static_cast<std::size_t>(h) * w * k, fill) {}

  int pixel_count() const { return height * width; }

  std::span<double> pixel(int i) {
    return {data.data() + static_cast<std::size_t>(i) * classes,
            static_cast<std::size_t>(classes)};
  }
  std::span<const double> pixel(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * classes,
            static_cast<std::size_t>(classes)};
  }
};

using ProbMap = LogitMap;  // same shape; rows sum to 1

enum class LossKind {
  kCrossEntropy,     // softmax on raw logits
  kLogitConstraint,  // softmax on logits scaled by 1/||z||
};

// Stable softmax (max subtraction). p and z may not alias.
void softmax(std::span<const double> z, std::span<double> p);

// Softmax of z / max(||z||, norm_epsilon). Scale-invariant in z.
void normalized_softmax(std::span<const double> z, std::span<double> p,
                        const LossConfig& cfg);

// Cross-entropy -log p_label; writes dL/dz into grad. Returns the loss.
double ce_loss_grad(std::span<const double> z, int label, std::span<double> grad);

// Logit-constraint loss -log p*_label with its exact gradient, which
// stays orthogonal to z whenever ||z|| clears the epsilon guard.
double lc_loss_grad(std::span<const double> z, int label, const LossConfig& cfg,
                    std::span<double> grad);

struct ImageLossResult {
  double loss = 0.0;
  LogitMap grad;
};

// Mean per-pixel loss over the full pixel count, scaled by `weight`.
// Ignored pixels contribute zero loss and zero gradient.
ImageLossResult image_loss(const LogitMap& logits, const LabelMap& labels,
                           double weight, const LossConfig& cfg,
                           LossKind kind = LossKind::kLogitConstraint);

}  // namespace vblc
