#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "feie/labels.hpp"
#include "feie/tensor.hpp"

namespace feie::data {

/// One frame descriptor with whichever task labels its source dataset carries.
struct FrameSample {
  std::string id;
  std::vector<double> features;
  std::optional<std::array<double, 2>> va;
  std::optional<int> expr;
  std::optional<std::array<int, kNumActionUnits>> au;

  bool operator==(const FrameSample&) const = default;
};

/// How rows past the true length were filled.
enum class Padding { kZero, kNoise };

/// A padded video: t × d frame matrix, its pre-padding length, and the
/// video-level intensity label.
struct VideoSample {
  std::string id;
  Tensor frames;
  std::size_t length = 0;
  std::array<double, kNumIntensities> label{};
  Padding padding = Padding::kZero;

  std::size_t steps() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }

  bool operator==(const VideoSample&) const = default;
};

/// Throws ValidationError naming the offending field.
void validate(const FrameSample& sample);
void validate(const VideoSample& sample);

}  // namespace feie::data
