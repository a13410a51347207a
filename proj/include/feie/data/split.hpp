#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "feie/tensor.hpp"

namespace feie::data {

/// Integer sizes for `n` items cut by `fractions`: floor every share, then
/// hand the remainder to the largest fractional parts (earlier index wins
/// ties). Fractions must be non-negative and sum to 1 within 1e-9.
std::vector<std::size_t> allocate_counts(std::size_t n, std::span<const double> fractions);

/// Deterministic shuffle of 0..n-1 followed by consecutive cuts.
std::vector<std::vector<std::size_t>> split_indices(std::size_t n,
                                                    std::span<const double> fractions,
                                                    std::uint64_t seed);

template <typename T>
std::vector<std::vector<T>> split(const std::vector<T>& items, std::span<const double> fractions,
                                  std::uint64_t seed) {
  std::vector<std::vector<T>> parts;
  for (const auto& idx : split_indices(items.size(), fractions, seed)) {
    auto& part = parts.emplace_back();
    part.reserve(idx.size());
    for (std::size_t i : idx) part.push_back(items[i]);
  }
  return parts;
}

struct PaddedSequence {
  Tensor frames;  // t × d
  std::size_t length = 0;
};

/// Appends zero rows up to `steps`. Rejects empty input and inputs longer
/// than `steps`; nothing is ever truncated.
PaddedSequence pad_sequence(const std::vector<std::vector<double>>& frames, std::size_t steps);

}  // namespace feie::data
