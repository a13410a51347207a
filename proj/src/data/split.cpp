#include "feie/data/split.hpp"

#include <cmath>
#include <string>

#include "feie/error.hpp"

namespace feie::data {

std::vector<std::size_t> allocate_counts(std::size_t n, std::span<const double> fractions) {
  if (fractions.empty()) throw ValidationError("no split fractions given");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ValidationError("split fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("split fractions sum to " + std::to_string(total) + ", expected 1");
  }
  std::vector<std::size_t> counts(fractions.size());
  std::vector<double> remainder(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double share = fractions[i] * static_cast<double>(n);
    // Guard against shares like 629.9999999 that are integral up to rounding.
    const double rounded = std::round(share);
    const double whole = std::abs(share - rounded) < 1e-9 ? rounded : std::floor(share);
    counts[i] = static_cast<std::size_t>(whole);
    remainder[i] = share - whole;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

std::vector<std::vector<std::size_t>> split_indices(std::size_t n,
                                                    std::span<const double> fractions,
                                                    std::uint64_t seed) {
  const auto counts = allocate_counts(n, fractions);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> parts;
  std::size_t offset = 0;
  for (std::size_t c : counts) {
    parts.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                       perm.begin() + static_cast<std::ptrdiff_t>(offset + c));
    offset += c;
  }
  return parts;
}

PaddedSequence pad_sequence(const std::vector<std::vector<double>>& frames, std::size_t steps) {
  if (frames.empty()) throw ValidationError("cannot pad an empty video (length 0)");
  if (frames.size() > steps) {
    throw ValidationError("video length " + std::to_string(frames.size()) +
                          " exceeds padded length " + std::to_string(steps));
  }
  const std::size_t d = frames.front().size();
  if (d == 0) throw ValidationError("frames have zero width");
  PaddedSequence out{Tensor({steps, d}, 0.0), frames.size()};
  for (std::size_t r = 0; r < frames.size(); ++r) {
    if (frames[r].size() != d) {
      throw ShapeError("frame " + std::to_string(r) + " has width " +
                       std::to_string(frames[r].size()) + ", expected " + std::to_string(d));
    }
    std::copy(frames[r].begin(), frames[r].end(),
              out.frames.values().begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  return out;
}

}  // namespace feie::data
