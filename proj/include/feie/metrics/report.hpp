#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "feie/metrics/metrics.hpp"
#include "feie/tensor.hpp"

namespace feie::metrics {

inline constexpr std::string_view kReportSchemaVersion = "1";

enum class TaskKind { kIntensity, kValenceArousal, kExpression, kActionUnit };

std::string_view task_name(TaskKind kind);
TaskKind parse_task(std::string_view name);

struct ClassScore {
  std::string name;
  double value = 0.0;
  bool degenerate = false;
};

/// Assembled evaluation results for one task. Exactly one of the blocks is
/// filled, matching `kind`.
struct EvalReport {
  TaskKind kind = TaskKind::kIntensity;
  std::size_t samples = 0;

  std::vector<ClassScore> pearson;  // per intensity class
  double mean_pearson = 0.0;

  std::vector<ClassScore> ccc;  // valence, arousal
  double mean_ccc = 0.0;

  std::vector<ClassScore> f1;  // per expression or action unit
  double macro_f1 = 0.0;

  /// The headline figure of the task: mean ρ, mean CCC, or macro F1.
  double headline() const;
};

/// Dispatches on the task: intensity → per-column Pearson, valence-arousal →
/// per-column CCC, expression → macro F1 over argmax, action units → macro F1
/// over predictions thresholded at 0.5. Predictions and labels are
/// samples × classes; expression labels may be one-hot rows or a single
/// column of class indices.
EvalReport evaluate(const Tensor& preds, const Tensor& labels, TaskKind kind);

/// value × 100 with two decimals.
std::string percent(double value);

/// Flat table: one `metric,class,value,percent,flag` row per score.
std::string to_csv(const EvalReport& report);
nlohmann::json to_json(const EvalReport& report);

}  // namespace feie::metrics
