#include "vblc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vblc/errors.hpp"
#include "vblc/rng.hpp"

namespace vblc {

std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& fn, std::span<const double> z,
    double h) {
  std::vector<double> probe(z.begin(), z.end());
  std::vector<double> grad(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double orig = probe[j];
    probe[j] = orig + h;
    const double up = fn(probe);
    probe[j] = orig - h;
    const double down = fn(probe);
    probe[j] = orig;
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::max(std::abs(a[i]), std::abs(b[i])));
  }
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

GradCheckResult run_gradcheck(int classes, int trials, std::uint64_t seed,
                              const LossConfig& cfg) {
  if (classes < 2) throw ValidationError("gradcheck: classes must be >= 2");
  if (trials < 1) throw ValidationError("gradcheck: trials must be >= 1");

  Rng rng(seed);
  GradCheckResult result;
  result.trials = trials;
  std::vector<double> z(static_cast<std::size_t>(classes));
  std::vector<double> analytic(z.size());
  const std::size_t k = z.size();

  for (int t = 0; t < trials; ++t) {
    // keep draws clear of the ||z|| -> 0 singularity, where fixed-step
    // finite differences lose accuracy long before the analytic form does
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : z) {
        v = rng.uniform(-4.0, 4.0);
        norm += v * v;
      }
    } while (std::sqrt(norm) < 0.5);
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));

    ce_loss_grad(z, label, analytic);
    std::vector<double> scratch(k);
    auto ce_fn = [&](std::span<const double> probe) {
      double lse_max = probe[0];
      for (double v : probe) lse_max = std::max(lse_max, v);
      double sum = 0.0;
      for (double v : probe) sum += std::exp(v - lse_max);
      return lse_max + std::log(sum) - probe[static_cast<std::size_t>(label)];
    };
    result.ce_max_rel_err = std::max(
        result.ce_max_rel_err,
        max_relative_error(analytic, finite_difference_gradient(ce_fn, z)));

    lc_loss_grad(z, label, cfg, analytic);
    auto lc_fn = [&](std::span<const double> probe) {
      double norm = 0.0;
      for (double v : probe) norm += v * v;
      norm = std::max(std::sqrt(norm), cfg.norm_epsilon);
      double lse_max = probe[0] / norm;
      for (double v : probe) lse_max = std::max(lse_max, v / norm);
      double sum = 0.0;
      for (double v : probe) sum += std::exp(v / norm - lse_max);
      return lse_max + std::log(sum) - probe[static_cast<std::size_t>(label)] / norm;
    };
    result.lc_max_rel_err = std::max(
        result.lc_max_rel_err,
        max_relative_error(analytic, finite_difference_gradient(lc_fn, z)));
  }
  return result;
}

}  // namespace vblc
