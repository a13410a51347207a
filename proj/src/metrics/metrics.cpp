#include "feie/metrics/metrics.hpp"

#include <cmath>
#include <string>

#include "feie/error.hpp"

namespace feie::metrics {

namespace {

struct Moments {
  double mean_x = 0, mean_y = 0, var_x = 0, var_y = 0, cov = 0;
};

Moments moments(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()));
  }
  if (x.size() < 2) throw ValidationError("correlation needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  Moments m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m.mean_x += x[i];
    m.mean_y += y[i];
  }
  m.mean_x /= n;
  m.mean_y /= n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - m.mean_x;
    const double dy = y[i] - m.mean_y;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  m.var_x /= n;
  m.var_y /= n;
  m.cov /= n;
  return m;
}

F1Scores finish(const std::vector<long>& tp, const std::vector<long>& fp,
                const std::vector<long>& fn) {
  F1Scores s;
  const std::size_t k = tp.size();
  s.precision.resize(k);
  s.recall.resize(k);
  s.f1.resize(k);
  s.absent.resize(k);
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double p_den = static_cast<double>(tp[c] + fp[c]);
    const double r_den = static_cast<double>(tp[c] + fn[c]);
    s.precision[c] = p_den > 0 ? static_cast<double>(tp[c]) / p_den : 0.0;
    s.recall[c] = r_den > 0 ? static_cast<double>(tp[c]) / r_den : 0.0;
    const double pr = s.precision[c] + s.recall[c];
    s.f1[c] = pr > 0 ? 2.0 * s.precision[c] * s.recall[c] / pr : 0.0;
    s.absent[c] = tp[c] + fp[c] + fn[c] == 0;
    total += s.f1[c];
  }
  s.macro = k ? total / static_cast<double>(k) : 0.0;
  return s;
}

}  // namespace

Correlation pearson(std::span<const double> x, std::span<const double> y) {
  const Moments m = moments(x, y);
  if (m.var_x == 0.0 || m.var_y == 0.0) return {0.0, true};
  return {m.cov / std::sqrt(m.var_x * m.var_y), false};
}

Correlation ccc(std::span<const double> x, std::span<const double> y) {
  const Moments m = moments(x, y);
  const double gap = m.mean_x - m.mean_y;
  const double denom = m.var_x + m.var_y + gap * gap;
  if (denom == 0.0) return {0.0, true};
  return {2.0 * m.cov / denom, false};
}

F1Scores macro_f1(std::span<const int> preds, std::span<const int> labels, int n_classes) {
  if (preds.size() != labels.size()) throw ValidationError("macro_f1: length mismatch");
  if (preds.empty()) throw ValidationError("macro_f1: empty input");
  if (n_classes <= 0) throw ValidationError("macro_f1: n_classes must be positive");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<long> tp(k), fp(k), fn(k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], y = labels[i];
    if (p < 0 || p >= n_classes || y < 0 || y >= n_classes) {
      throw ValidationError("macro_f1: class index out of range at sample " + std::to_string(i));
    }
    if (p == y) {
      ++tp[static_cast<std::size_t>(p)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  return finish(tp, fp, fn);
}

F1Scores macro_f1_multilabel(const std::vector<std::vector<int>>& preds,
                             const std::vector<std::vector<int>>& labels) {
  if (preds.size() != labels.size()) throw ValidationError("macro_f1: length mismatch");
  if (preds.empty()) throw ValidationError("macro_f1: empty input");
  const std::size_t k = preds.front().size();
  std::vector<long> tp(k), fp(k), fn(k);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != k || labels[i].size() != k) {
      throw ValidationError("macro_f1: inconsistent label space at sample " + std::to_string(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      const bool p = preds[i][c] != 0, y = labels[i][c] != 0;
      if (p && y) ++tp[c];
      if (p && !y) ++fp[c];
      if (!p && y) ++fn[c];
    }
  }
  return finish(tp, fp, fn);
}

}  // namespace feie::metrics
