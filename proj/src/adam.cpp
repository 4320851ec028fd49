#include "demvc/adam.hpp"

#include <cmath>

namespace demvc {

void AdamState::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw UsageError("Adam epsilon must be positive");
  if (first_moment.size() != second_moment.size()) {
    throw UsageError("Adam moment lists have different lengths");
  }
}

void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor> grads) {
  state.validate();
  if (params.size() != grads.size()) {
    throw DimensionError("Adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "Adam gradient");
  }
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  } else {
    if (state.first_moment.size() != params.size()) {
      throw DimensionError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                           " parameters, got " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      require_same_shape(*params[i], state.first_moment[i], "Adam moment");
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon;

  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i].data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    const std::size_t n = params[i]->size();
#pragma omp parallel for simd schedule(static) if (n > 65536)
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace demvc
