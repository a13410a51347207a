#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feie/autodiff/grad_check.hpp"

namespace feie::pipeline {

struct GradcheckOptions {
  double epsilon = 1e-6;
  std::size_t coords = 100;  // per parameter, capped at its size
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

/// One gradient check: a loss, or a layer's parameters gathered across the
/// loss checks that reach them.
struct GradcheckCase {
  std::string name;
  std::string kind;  // "loss" or "layer"
  std::size_t coords = 0;
  double max_rel_error = 0.0;
  std::vector<autodiff::ParameterCheck> parameters;
  /// Parameters the loss is provably invariant to; not sampled.
  std::vector<std::string> invariant;
  bool passed = false;
};

struct GradcheckSuite {
  GradcheckOptions options;
  std::vector<GradcheckCase> cases;
  bool truncation_warning = false;

  bool passed() const;
  std::vector<std::string> failures() const;
};

/// Checks L_CCC, L_CCE, L_BCE, L_DM, L_MMA and the Pearson and MSE aggregator
/// losses at small shapes, then summarises per layer
/// (trunk, heads, GRU, mask, ff1, ff_out).
GradcheckSuite run_gradcheck_suite(const GradcheckOptions& options);

nlohmann::json to_json(const GradcheckSuite& suite);
std::string to_csv(const GradcheckSuite& suite);

/// Graph op by its printed name, for the fault-injection hook.
std::optional<autodiff::Op> parse_op(std::string_view name);

}  // namespace feie::pipeline
