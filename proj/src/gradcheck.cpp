#include "demvc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace demvc {

GradCheckResult finite_diff_check(const LossWithGrad& loss, std::span<Tensor* const> params,
                                  double step, std::size_t max_entries_per_param) {
  if (!(step > 0.0)) throw UsageError("finite difference step must be positive");
  std::vector<Tensor> analytic;
  const double base = loss(&analytic);
  if (!std::isfinite(base)) throw EvaluationError("loss is not finite at the check point");
  if (analytic.size() != params.size()) {
    throw DimensionError("loss returned " + std::to_string(analytic.size()) +
                         " gradients for " + std::to_string(params.size()) + " parameters");
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    require_same_shape(p, analytic[pi], "analytic gradient");
    const std::size_t n = p.size();
    const std::size_t stride =
        (max_entries_per_param == 0 || n <= max_entries_per_param)
            ? 1
            : (n + max_entries_per_param - 1) / max_entries_per_param;
    for (std::size_t j = 0; j < n; j += stride) {
      const double saved = p[j];
      p[j] = saved + step;
      const double up = loss(nullptr);
      p[j] = saved - step;
      const double down = loss(nullptr);
      p[j] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw EvaluationError("loss is not finite under perturbation of parameter " +
                              std::to_string(pi) + " entry " + std::to_string(j));
      }
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][j];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      const double err = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_param = pi;
        result.worst_index = j;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace demvc
