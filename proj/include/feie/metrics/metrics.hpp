#pragma once

#include <span>
#include <vector>

namespace feie::metrics {

/// A correlation-type statistic plus a flag raised when it was undefined
/// (zero variance / zero denominator) and reported as 0.
struct Correlation {
  double value = 0.0;
  bool degenerate = false;
};

/// Pearson correlation with population moments. Throws on length < 2 or
/// mismatched lengths.
Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Lin's concordance correlation 2·s_xy / (s_x + s_y + (x̄ − ȳ)²), population
/// moments.
Correlation ccc(std::span<const double> x, std::span<const double> y);

struct F1Scores {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  /// Classes that appear in neither predictions nor labels.
  std::vector<bool> absent;
  double macro = 0.0;
};

/// Per-class F1 for single-label predictions given as class indices. 0/0 is 0.
F1Scores macro_f1(std::span<const int> preds, std::span<const int> labels, int n_classes);

/// Per-label F1 for multi-label binary predictions (one row per sample).
F1Scores macro_f1_multilabel(const std::vector<std::vector<int>>& preds,
                             const std::vector<std::vector<int>>& labels);

}  // namespace feie::metrics
