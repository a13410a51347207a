#pragma once

#include <cstdint>

#include "feie/tensor.hpp"

namespace feie::autodiff {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates keyed by parameter name.
struct AdamState {
  TensorMap first_moment;
  TensorMap second_moment;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update of every parameter that has a gradient.
/// Parameters without a gradient entry are left untouched.
void adam_update(TensorMap& params, const TensorMap& grads, AdamState& state, double lr,
                 const AdamConfig& config = {});

}  // namespace feie::autodiff
