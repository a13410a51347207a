#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace feie {

inline constexpr std::size_t kNumExpressions = 7;
inline constexpr std::size_t kNumActionUnits = 17;
inline constexpr std::size_t kNumIntensities = 7;
/// Valence-arousal, expressions, action units.
inline constexpr std::size_t kAffectDim = 2 + kNumExpressions + kNumActionUnits;

/// Serialized order of the basic-expression channel.
inline constexpr std::array<std::string_view, kNumExpressions> kExpressionNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral"};

enum Expression : std::size_t {
  kAnger = 0,
  kDisgust = 1,
  kFear = 2,
  kHappiness = 3,
  kSadness = 4,
  kSurprise = 5,
  kNeutral = 6,
};

/// FACS numbers of the action-unit channel, in storage order.
inline constexpr std::array<int, kNumActionUnits> kActionUnits = {
    1, 2, 4, 5, 6, 7, 9, 10, 11, 12, 15, 17, 20, 23, 24, 25, 26};

/// Video-level intensity targets, in storage order.
inline constexpr std::array<std::string_view, kNumIntensities> kIntensityNames = {
    "Adoration", "Amusement", "Anxiety", "Disgust", "Empathic-Pain", "Fear", "Surprise"};

inline constexpr std::array<std::string_view, 2> kValenceArousalNames = {"valence", "arousal"};

/// Storage index of a FACS action unit, or kNumActionUnits if it is not tracked.
constexpr std::size_t au_index(int facs) {
  for (std::size_t i = 0; i < kActionUnits.size(); ++i) {
    if (kActionUnits[i] == facs) return i;
  }
  return kNumActionUnits;
}

}  // namespace feie
