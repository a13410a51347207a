#include "feie/data/samples.hpp"

#include <cmath>

#include "feie/error.hpp"

namespace feie::data {

namespace {

[[noreturn]] void reject(const std::string& id, const std::string& field, const std::string& why) {
  throw ValidationError("sample '" + id + "': field '" + field + "' " + why);
}

}  // namespace

void validate(const FrameSample& s) {
  if (s.features.empty()) reject(s.id, "features", "is empty");
  for (double v : s.features) {
    if (!std::isfinite(v)) reject(s.id, "features", "contains a non-finite value");
  }
  if (!s.va && !s.expr && !s.au) reject(s.id, "labels", "carries no label");
  if (s.va) {
    for (double v : *s.va) {
      if (!(v >= -1.0 && v <= 1.0)) reject(s.id, "va", "outside [-1, 1]");
    }
  }
  if (s.expr && (*s.expr < 0 || *s.expr >= static_cast<int>(kNumExpressions))) {
    reject(s.id, "expr", "class index outside 0..6");
  }
  if (s.au) {
    for (int v : *s.au) {
      if (v != 0 && v != 1) reject(s.id, "au", "is not binary");
    }
  }
}

void validate(const VideoSample& s) {
  const std::size_t t = s.frames.rows();
  if (s.frames.rank() != 2) reject(s.id, "frames", "must be a t x d matrix");
  if (s.length < 1 || s.length > t) {
    reject(s.id, "length", std::to_string(s.length) + " outside [1, " + std::to_string(t) + "]");
  }
  for (double v : s.frames.values()) {
    if (!std::isfinite(v)) reject(s.id, "frames", "contains a non-finite value");
  }
  if (s.padding == Padding::kZero) {
    for (std::size_t r = s.length; r < t; ++r) {
      for (std::size_t c = 0; c < s.frames.cols(); ++c) {
        if (s.frames.at(r, c) != 0.0) {
          reject(s.id, "frames", "padded row " + std::to_string(r) + " is not zero");
        }
      }
    }
  }
  for (double v : s.label) {
    if (!(v >= 0.0 && v <= 1.0)) reject(s.id, "label", "outside [0, 1]");
  }
}

}  // namespace feie::data
