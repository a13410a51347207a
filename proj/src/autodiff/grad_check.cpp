#include "feie/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "feie/error.hpp"

namespace feie::autodiff {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

double GradientReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& p : parameters) worst = std::max(worst, p.max_rel_error);
  return worst;
}

std::size_t GradientReport::coords_checked() const {
  std::size_t n = 0;
  for (const auto& p : parameters) n += p.coords_checked;
  return n;
}

GradientReport grad_check(Graph& graph, Var root, const Bindings& bindings, double epsilon,
                          std::size_t n_coords, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ValidationError("grad_check epsilon must be positive");
  if (n_coords == 0) throw ValidationError("grad_check needs at least one coordinate");

  graph.evaluate(root, bindings);
  const Gradients analytic = graph.backward();

  GradientReport report;
  report.epsilon = epsilon;
  report.truncation_warning = epsilon > 1e-4;

  std::mt19937_64 rng(seed);
  Bindings probe = bindings;
  for (const auto& [name, grad] : analytic) {
    Tensor& theta = probe.at(name);
    std::vector<std::size_t> coords(theta.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    const std::size_t take = std::min(n_coords, coords.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, coords.size() - 1);
      std::swap(coords[i], coords[pick(rng)]);
    }
    coords.resize(take);
    std::sort(coords.begin(), coords.end());

    ParameterCheck check;
    check.name = name;
    for (std::size_t idx : coords) {
      const double saved = theta[idx];
      theta[idx] = saved + epsilon;
      const double f_plus = graph.evaluate(root, probe).item();
      theta[idx] = saved - epsilon;
      const double f_minus = graph.evaluate(root, probe).item();
      theta[idx] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
      const double err = relative_error(grad[idx], numeric);
      if (err > check.max_rel_error || check.coords_checked == 0) {
        check.max_rel_error = err;
        check.worst_index = idx;
        check.worst_analytic = grad[idx];
        check.worst_numeric = numeric;
      }
      ++check.coords_checked;
    }
    report.parameters.push_back(std::move(check));
  }
  graph.evaluate(root, bindings);
  return report;
}

}  // namespace feie::autodiff
