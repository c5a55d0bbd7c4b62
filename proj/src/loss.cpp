#include "vblc/loss.hpp"

#include <cmath>
#include <string>

#include "vblc/errors.hpp"

namespace vblc {

namespace {

// log(sum exp(z - m)) with m = max(z); fills p with softmax(z).
double softmax_lse(std::span<const double> z, std::span<double> p) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) p[i] /= sum;
  return m + std::log(sum);
}

double l2_norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

void check_label(std::span<const double> z, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= z.size()) {
    throw ValidationError("loss: label " + std::to_string(label) + " out of range for " +
                          std::to_string(z.size()) + " classes");
  }
}

}  // namespace

void softmax(std::span<const double> z, std::span<double> p) { softmax_lse(z, p); }

void normalized_softmax(std::span<const double> z, std::span<double> p,
                        const LossConfig& cfg) {
  const double n = std::max(l2_norm(z), cfg.norm_epsilon);
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = z[i] / n;
  double m = p[0];
  for (double v : p) m = std::max(m, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(p[i] - m);
    sum += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= sum;
}

double ce_loss_grad(std::span<const double> z, int label, std::span<double> grad) {
  check_label(z, label);
  const double lse = softmax_lse(z, grad);  // grad holds p for now
  const double loss = lse - z[label];
  grad[label] -= 1.0;
  return loss;
}

double lc_loss_grad(std::span<const double> z, int label, const LossConfig& cfg,
                    std::span<double> grad) {
  check_label(z, label);
  const std::size_t k = z.size();
  const double norm = l2_norm(z);
  const double n = std::max(norm, cfg.norm_epsilon);

  // p* = softmax(z / n), reusing grad as scratch
  double loss;
  {
    for (std::size_t i = 0; i < k; ++i) grad[i] = z[i] / n;
    const double u_label = grad[label];
    const double lse = softmax_lse(grad, grad);
    loss = lse - u_label;
  }

  if (norm > cfg.norm_epsilon) {
    // exact gradient: (1/n) * ((p*_j - y_j) - z_j / n^2 * sum_k z_k (p*_k - y_k))
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += z[i] * grad[i];
    s -= z[label];
    const double inv_n = 1.0 / n;
    const double radial = s * inv_n * inv_n;
    for (std::size_t i = 0; i < k; ++i) {
      const double residual = grad[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
      grad[i] = inv_n * (residual - z[i] * radial);
    }
  } else {
    // inside the guard the scale is pinned at epsilon, so the gradient
    // reduces to the plain softmax form at that scale
    const double inv_n = 1.0 / n;
    for (std::size_t i = 0; i < k; ++i) {
      grad[i] = inv_n * (grad[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
    }
  }
  return loss;
}

ImageLossResult image_loss(const LogitMap& logits, const LabelMap& labels,
                           double weight, const LossConfig& cfg, LossKind kind) {
  if (logits.height != labels.height || logits.width != labels.width) {
    throw ValidationError("image_loss: logit/label shape mismatch");
  }
  const int n = logits.pixel_count();
  const double scale = weight / static_cast<double>(n);

  ImageLossResult out;
  out.grad = LogitMap(logits.height, logits.width, logits.classes, 0.0);
  double total = 0.0;
  std::vector<double> g(static_cast<std::size_t>(logits.classes));
  for (int i = 0; i < n; ++i) {
    const std::uint8_t y = labels.data[static_cast<std::size_t>(i)];
    if (y == LabelMap::kIgnoreId) continue;
    const auto z = logits.pixel(i);
    const double l = kind == LossKind::kCrossEntropy
                         ? ce_loss_grad(z, y, g)
                         : lc_loss_grad(z, y, cfg, g);
    total += l;
    auto dst = out.grad.pixel(i);
    for (int c = 0; c < logits.classes; ++c) dst[c] = scale * g[static_cast<std::size_t>(c)];
  }
  out.loss = scale * total;
  return out;
}

}  // namespace vblc
