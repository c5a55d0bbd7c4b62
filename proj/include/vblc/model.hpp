#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vblc/image.hpp"
#include "vblc/loss.hpp"
#include "vblc/rng.hpp"

namespace vblc {

inline constexpr int kFeatureDim = 12;

// Row-major H x W x F per-pixel features.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int dims = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int f)
      : height(h), width(w), dims(f), data(static_cast<std::size_t>(h) * w * f, 0.0) {}

  int pixel_count() const { return height * width; }

  std::span<const double> pixel(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dims,
            static_cast<std::size_t>(dims)};
  }
};

// Two-layer per-pixel MLP: logits = W2 * relu(W1 * f + b1) + b2.
struct ModelParams {
  int feature_dim = kFeatureDim;
  int hidden_dim = 32;
  int classes = 0;
  std::vector<double> w1;  // feature_dim x hidden_dim
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim x classes
  std::vector<double> b2;  // classes

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }
  bool same_shape(const ModelParams& o) const {
    return feature_dim == o.feature_dim && hidden_dim == o.hidden_dim && classes == o.classes;
  }
};

struct ParamGrad {
  std::vector<double> w1, b1, w2, b2;
};

ParamGrad zero_grad(const ModelParams& params);
void add_grad(ParamGrad& acc, const ParamGrad& g);
void scale_grad(ParamGrad& g, double s);

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for each layer.
ModelParams init_params(int feature_dim, int hidden_dim, int classes, Rng& rng);

// Fixed 12-dim per-pixel features: rgb, normalized coordinates,
// 3x3 channel means, 3x3 channel std-devs, saturation.
FeatureMap featurize(const Image& img);

LogitMap forward(const ModelParams& params, const FeatureMap& feats);

// Exact gradients of sum_pixels <grad_logits, logits> w.r.t. every
// parameter. ReLU subgradient at 0 is taken as 0.
ParamGrad backward(const ModelParams& params, const FeatureMap& feats,
                   const LogitMap& grad_logits);

// Heavy-ball update: v = momentum * v + g; p -= lr * v.
void sgd_step(ModelParams& params, const ParamGrad& grad, double lr, double momentum,
              ParamGrad& velocity);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace vblc
