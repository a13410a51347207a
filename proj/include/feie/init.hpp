#pragma once

#include <cmath>
#include <random>

#include "feie/tensor.hpp"

namespace feie {

/// Uniform Glorot initialisation for a fan_in × fan_out weight.
inline Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out,
                             std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace feie
