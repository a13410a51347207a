#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "feie/autodiff/graph.hpp"

namespace feie::autodiff {

struct ParameterCheck {
  std::string name;
  std::size_t coords_checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradientReport {
  double epsilon = 0.0;
  std::vector<ParameterCheck> parameters;
  /// Set when epsilon is large enough that truncation error dominates.
  bool truncation_warning = false;

  double max_rel_error() const;
  std::size_t coords_checked() const;
  bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// |a - n| / max(|a|, |n|, 1e-12).
double relative_error(double analytic, double numeric);

/// Compares analytic gradients of `root` against central differences
/// (f(θ+ε) − f(θ−ε)) / 2ε. For every parameter, min(n_coords, size)
/// distinct coordinates are drawn from a generator seeded with `seed`.
GradientReport grad_check(Graph& graph, Var root, const Bindings& bindings, double epsilon,
                          std::size_t n_coords, std::uint64_t seed);

}  // namespace feie::autodiff
