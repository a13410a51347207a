#include "feie/autodiff/adam.hpp"

#include <cmath>

#include "feie/error.hpp"

namespace feie::autodiff {

void adam_update(TensorMap& params, const TensorMap& grads, AdamState& state, double lr,
                 const AdamConfig& config) {
  if (lr < 0.0) throw ValidationError("learning rate must be non-negative");
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (auto& [name, theta] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (g.size() != theta.size()) {
      throw ShapeError("gradient for '" + name + "' has shape " + g.shape_string() +
                       ", parameter has " + theta.shape_string());
    }
    auto [mit, m_new] = state.first_moment.try_emplace(name, theta.shape(), 0.0);
    auto [vit, v_new] = state.second_moment.try_emplace(name, theta.shape(), 0.0);
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      if (lr == 0.0) continue;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace feie::autodiff
