#include "feie/metrics/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "feie/error.hpp"
#include "feie/labels.hpp"

namespace feie::metrics {

namespace {

std::vector<double> column(const Tensor& t, std::size_t c) {
  std::vector<double> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t.at(r, c);
  return out;
}

int argmax_row(const Tensor& t, std::size_t r) {
  int best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c) {
    if (t.at(r, c) > t.at(r, static_cast<std::size_t>(best))) best = static_cast<int>(c);
  }
  return best;
}

void require_columns(const Tensor& preds, std::size_t cols, std::string_view task) {
  if (preds.cols() != cols) {
    throw ShapeError(std::string(task) + " predictions need " + std::to_string(cols) +
                     " columns, got " + preds.shape_string());
  }
}

}  // namespace

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kIntensity: return "intensity";
    case TaskKind::kValenceArousal: return "va";
    case TaskKind::kExpression: return "expr";
    case TaskKind::kActionUnit: return "au";
  }
  return "unknown";
}

TaskKind parse_task(std::string_view name) {
  for (TaskKind k : {TaskKind::kIntensity, TaskKind::kValenceArousal, TaskKind::kExpression,
                     TaskKind::kActionUnit}) {
    if (task_name(k) == name) return k;
  }
  throw ValidationError("unknown task kind '" + std::string(name) + "'");
}

double EvalReport::headline() const {
  switch (kind) {
    case TaskKind::kIntensity: return mean_pearson;
    case TaskKind::kValenceArousal: return mean_ccc;
    default: return macro_f1;
  }
}

EvalReport evaluate(const Tensor& preds, const Tensor& labels, TaskKind kind) {
  if (preds.rows() != labels.rows()) {
    throw ShapeError("prediction rows " + std::to_string(preds.rows()) + " != label rows " +
                     std::to_string(labels.rows()));
  }
  EvalReport report;
  report.kind = kind;
  report.samples = preds.rows();

  switch (kind) {
    case TaskKind::kIntensity: {
      require_columns(preds, kNumIntensities, "intensity");
      require_columns(labels, kNumIntensities, "intensity");
      double total = 0.0;
      for (std::size_t c = 0; c < kNumIntensities; ++c) {
        const auto p = column(preds, c), y = column(labels, c);
        const Correlation rho = pearson(p, y);
        report.pearson.push_back({std::string(kIntensityNames[c]), rho.value, rho.degenerate});
        total += rho.value;
      }
      report.mean_pearson = total / static_cast<double>(kNumIntensities);
      break;
    }
    case TaskKind::kValenceArousal: {
      require_columns(preds, 2, "va");
      require_columns(labels, 2, "va");
      double total = 0.0;
      for (std::size_t c = 0; c < 2; ++c) {
        const auto p = column(preds, c), y = column(labels, c);
        const Correlation r = metrics::ccc(p, y);
        report.ccc.push_back({std::string(kValenceArousalNames[c]), r.value, r.degenerate});
        total += r.value;
      }
      report.mean_ccc = total / 2.0;
      break;
    }
    case TaskKind::kExpression: {
      require_columns(preds, kNumExpressions, "expr");
      std::vector<int> p(preds.rows()), y(preds.rows());
      for (std::size_t r = 0; r < preds.rows(); ++r) {
        p[r] = argmax_row(preds, r);
        y[r] = labels.cols() == 1 ? static_cast<int>(labels.at(r, 0)) : argmax_row(labels, r);
      }
      const F1Scores s = macro_f1(p, y, static_cast<int>(kNumExpressions));
      for (std::size_t c = 0; c < kNumExpressions; ++c) {
        report.f1.push_back({std::string(kExpressionNames[c]), s.f1[c], s.absent[c]});
      }
      report.macro_f1 = s.macro;
      break;
    }
    case TaskKind::kActionUnit: {
      require_columns(preds, kNumActionUnits, "au");
      require_columns(labels, kNumActionUnits, "au");
      std::vector<std::vector<int>> p(preds.rows()), y(preds.rows());
      for (std::size_t r = 0; r < preds.rows(); ++r) {
        for (std::size_t c = 0; c < kNumActionUnits; ++c) {
          p[r].push_back(preds.at(r, c) >= 0.5 ? 1 : 0);
          y[r].push_back(labels.at(r, c) >= 0.5 ? 1 : 0);
        }
      }
      const F1Scores s = macro_f1_multilabel(p, y);
      for (std::size_t c = 0; c < kNumActionUnits; ++c) {
        report.f1.push_back({"AU" + std::to_string(kActionUnits[c]), s.f1[c], s.absent[c]});
      }
      report.macro_f1 = s.macro;
      break;
    }
  }
  return report;
}

std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  return buf;
}

namespace {

std::string_view metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kIntensity: return "pearson";
    case TaskKind::kValenceArousal: return "ccc";
    default: return "f1";
  }
}

const std::vector<ClassScore>& scores(const EvalReport& r) {
  switch (r.kind) {
    case TaskKind::kIntensity: return r.pearson;
    case TaskKind::kValenceArousal: return r.ccc;
    default: return r.f1;
  }
}

}  // namespace

std::string to_csv(const EvalReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "schema_version," << kReportSchemaVersion << '\n';
  os << "task," << task_name(report.kind) << '\n';
  os << "samples," << report.samples << '\n';
  os << "metric,class,value,percent,flag\n";
  const auto metric = metric_name(report.kind);
  for (const auto& s : scores(report)) {
    os << metric << ',' << s.name << ',' << s.value << ',' << percent(s.value) << ','
       << (s.degenerate ? "degenerate" : "") << '\n';
  }
  os << metric << ",mean," << report.headline() << ',' << percent(report.headline()) << ",\n";
  return os.str();
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["task"] = task_name(report.kind);
  j["samples"] = report.samples;
  j["metric"] = metric_name(report.kind);
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& s : scores(report)) {
    classes.push_back({{"class", s.name},
                       {"value", s.value},
                       {"percent", percent(s.value)},
                       {"degenerate", s.degenerate}});
  }
  j["classes"] = classes;
  j["mean"] = report.headline();
  j["mean_percent"] = percent(report.headline());
  return j;
}

}  // namespace feie::metrics
