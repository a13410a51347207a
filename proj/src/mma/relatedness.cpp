#include "feie/mma/relatedness.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

#include "feie/error.hpp"

namespace feie::mma {

namespace {

RelatednessMatrix::Row row_of(std::initializer_list<int> prototypical,
                              std::initializer_list<int> observational) {
  RelatednessMatrix::Row row{};
  for (auto list : {prototypical, observational}) {
    for (int facs : list) row[au_index(facs)] = 1;
  }
  return row;
}

}  // namespace

bool RelatednessMatrix::related_facs(std::size_t expr, int facs) const {
  const std::size_t idx = au_index(facs);
  return idx < kNumActionUnits && related(expr, idx);
}

std::size_t RelatednessMatrix::row_sum(std::size_t expr) const {
  std::size_t n = 0;
  for (auto v : rows_[expr]) n += v;
  return n;
}

Tensor RelatednessMatrix::as_tensor() const {
  Tensor t({kNumExpressions, kNumActionUnits});
  for (std::size_t e = 0; e < kNumExpressions; ++e) {
    for (std::size_t a = 0; a < kNumActionUnits; ++a) t.at(e, a) = rows_[e][a];
  }
  return t;
}

RelatednessMatrix build_relatedness() {
  std::array<RelatednessMatrix::Row, kNumExpressions> rows{};
  // {prototypical}, {observational}
  rows[kHappiness] = row_of({12, 25}, {6});
  rows[kSadness] = row_of({4, 15}, {1, 6, 11, 17});
  rows[kFear] = row_of({1, 4, 20, 25}, {2, 5, 26});
  rows[kAnger] = row_of({4, 7, 24}, {10, 17, 23});
  rows[kSurprise] = row_of({1, 2, 25, 26}, {5});
  rows[kDisgust] = row_of({9, 10, 17}, {4, 24});
  rows[kNeutral] = RelatednessMatrix::Row{};
  return RelatednessMatrix(rows);
}

std::array<double, kNumActionUnits> pseudo_au(std::span<const double> expr,
                                              const RelatednessMatrix& m) {
  if (expr.size() != kNumExpressions) {
    throw ValidationError("pseudo_au: expected 7 expression probabilities, got " +
                          std::to_string(expr.size()));
  }
  double total = 0.0;
  for (double p : expr) {
    if (!(p >= -1e-12)) throw ValidationError("pseudo_au: negative expression probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ValidationError("pseudo_au: expression vector sums to " + std::to_string(total));
  }
  std::array<double, kNumActionUnits> out{};
  for (std::size_t e = 0; e < kNumExpressions; ++e) {
    for (std::size_t a = 0; a < kNumActionUnits; ++a) {
      if (m.related(e, a)) out[a] += expr[e];
    }
  }
  return out;
}

}  // namespace feie::mma
