#pragma once

#include <functional>
#include <span>
#include <vector>

#include "demvc/tensor.hpp"

namespace demvc {

// Evaluates a scalar loss at the current parameter values. When `grads` is
// non-null it must also be filled with the analytic gradient, one tensor per
// parameter in the same order.
using LossWithGrad = std::function<double(std::vector<Tensor>* grads)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares analytic gradients with central differences.
///
/// Each parameter entry is perturbed in place by +-step and restored. The
/// reported error is max |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
/// `max_entries_per_param` limits the check to evenly spaced entries of
/// large tensors (0 checks all).
GradCheckResult finite_diff_check(const LossWithGrad& loss, std::span<Tensor* const> params,
                                  double step, std::size_t max_entries_per_param = 0);

}  // namespace demvc
