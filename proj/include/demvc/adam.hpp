#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "demvc/tensor.hpp"

namespace demvc {

// Adam with bias correction. Moments are allocated on the first step from
// the parameter shapes and must keep matching afterwards.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;

  void validate() const;
};

// Updates `params` in place. `grads[i]` must match the shape of `*params[i]`.
void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor> grads);

}  // namespace demvc
