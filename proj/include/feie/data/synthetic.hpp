#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "feie/data/samples.hpp"
#include "feie/tensor.hpp"

namespace feie::data {

inline constexpr std::string_view kDataSchemaVersion = "1";

/// Describes a generated data file well enough to regenerate it.
struct DatasetManifest {
  std::string schema_version{kDataSchemaVersion};
  std::string kind;  // "frames" or "videos"
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::size_t>> counts;  // per split, in file order
  std::size_t steps = 0;                                     // t (videos only)
  std::size_t dim = 0;                                       // per-frame width
  std::vector<std::string> label_order;
  std::string recipe;
  nlohmann::json recipe_params;

  bool operator==(const DatasetManifest&) const = default;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

/// Frame-level generator: a latent affect state (valence-arousal, expression
/// class, action units coupled to the class through the relatedness table) is
/// linearly projected into a `input_dim` descriptor plus Gaussian noise.
struct FrameRecipe {
  std::size_t input_dim = 64;
  double feature_noise = 0.05;
  /// Probability of flipping each action-unit label bit.
  double au_flip = 0.0;
  /// Fractions of samples annotated with {va only, expr only, au only, all}.
  std::array<double, 4> mix = {0.0, 0.0, 0.0, 1.0};
  /// Seeds the projection, shared by every dataset of this recipe.
  std::uint64_t structure_seed = 1;

  static constexpr std::string_view kName = "affect-projection-v1";
  nlohmann::json to_json() const;
  static FrameRecipe from_json(const nlohmann::json& j);
};

/// Video-level generator: a smooth valence-arousal random walk drives
/// expression mixtures through fixed prototypes plus a per-video bias; action
/// units follow the pseudo-AUs of the expressions plus a per-video offset.
/// The seven intensity labels are a fixed squashed linear function of the
/// per-channel means over the first `length` frames only.
struct VideoRecipe {
  std::size_t steps = 32;
  std::size_t min_length = 8;
  std::size_t max_length = 32;
  Padding padding = Padding::kZero;
  /// Standard deviation of the Gaussian filling padded rows under kNoise.
  double pad_noise = 1.0;
  double walk_step = 0.08;
  double frame_noise = 0.02;
  /// Relative influence of the {va, expr, au} channels on the labels.
  std::array<double, 3> channel_weight = {1.0, 1.0, 1.0};
  /// Emit projected frame descriptors (FrameRecipe space) instead of the
  /// 26-dim affect representation.
  bool raw_features = false;
  std::uint64_t structure_seed = 1;
  FrameRecipe frame;  // projection used when raw_features is set

  static constexpr std::string_view kName = "affect-trajectory-v1";
  std::size_t dim() const { return raw_features ? frame.input_dim : kAffectDim; }
  nlohmann::json to_json() const;
  static VideoRecipe from_json(const nlohmann::json& j);
};

struct FrameDataset {
  std::vector<FrameSample> samples;
  DatasetManifest manifest;
};

struct VideoDataset {
  std::vector<VideoSample> samples;
  DatasetManifest manifest;
};

FrameDataset gen_frame_dataset(std::uint64_t seed, std::size_t n, const FrameRecipe& recipe);

/// Throws ValidationError if max_length > steps or min_length is 0 or above
/// max_length.
VideoDataset gen_video_dataset(std::uint64_t seed, std::size_t n, const VideoRecipe& recipe);

/// Label function applied to an un-padded affect trajectory (rows = frames,
/// 26 columns). Exposed so tests can check that labels ignore padding.
std::array<double, kNumIntensities> intensity_labels(const Tensor& affect, std::size_t length,
                                                     const VideoRecipe& recipe);

/// Projection of a 26-dim affect row into the frame descriptor space (no noise).
std::vector<double> project_affect(std::span<const double> affect, const FrameRecipe& recipe);

/// Independent 64-bit seed for item `index` of a stream seeded by `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace feie::data
