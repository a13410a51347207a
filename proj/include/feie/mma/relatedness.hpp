#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "feie/labels.hpp"
#include "feie/tensor.hpp"

namespace feie::mma {

/// Binary expression → action-unit relatedness: entry (e, a) is 1 when AU a
/// is prototypical or observational for expression e. Rows follow the
/// expression storage order, columns the action-unit storage order.
class RelatednessMatrix {
 public:
  using Row = std::array<std::uint8_t, kNumActionUnits>;

  RelatednessMatrix() = default;
  explicit RelatednessMatrix(std::array<Row, kNumExpressions> rows) : rows_(rows) {}

  bool related(std::size_t expr, std::size_t au) const { return rows_[expr][au] != 0; }
  /// Lookup by FACS number instead of storage index.
  bool related_facs(std::size_t expr, int facs) const;
  const Row& row(std::size_t expr) const { return rows_[expr]; }
  std::size_t row_sum(std::size_t expr) const;

  /// 7 × 17 matrix of 0.0 / 1.0.
  Tensor as_tensor() const;

  bool operator==(const RelatednessMatrix&) const = default;

 private:
  std::array<Row, kNumExpressions> rows_{};
};

/// The fixed expression/AU table. Neutral relates to no AU.
RelatednessMatrix build_relatedness();

/// Pseudo action-unit representation: the mixture Σ_e expr[e] · M[e, ·].
/// Throws ValidationError when expr is not on the 7-simplex (tolerance 1e-6).
std::array<double, kNumActionUnits> pseudo_au(std::span<const double> expr,
                                              const RelatednessMatrix& m);

}  // namespace feie::mma
