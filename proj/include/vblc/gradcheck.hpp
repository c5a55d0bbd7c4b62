#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vblc/loss.hpp"

namespace vblc {

// Central finite differences of a scalar function of z, step h.
std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& fn, std::span<const double> z,
    double h = 1e-5);

// max_j |a_j - b_j| relative to the largest component magnitude.
double max_relative_error(std::span<const double> a, std::span<const double> b);

struct GradCheckResult {
  double ce_max_rel_err = 0.0;
  double lc_max_rel_err = 0.0;
  int trials = 0;
};

// Random (z, label) pairs, analytic gradients of both losses checked
// against central differences.
GradCheckResult run_gradcheck(int classes, int trials, std::uint64_t seed,
                              const LossConfig& cfg = {});

}  // namespace vblc
