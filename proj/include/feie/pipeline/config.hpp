#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "feie/data/synthetic.hpp"
#include "feie/mma/model.hpp"
#include "feie/mrnn/model.hpp"
#include "feie/pipeline/representation.hpp"

namespace feie::pipeline {

inline constexpr std::string_view kConfigSchemaVersion = "1";

enum class Stage { kMma, kMrnnFrozen, kEndToEnd };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

struct DataConfig {
  std::size_t videos = 256;
  std::size_t frames = 2048;
  std::array<double, 3> split = {0.5, 0.25, 0.25};  // train, val, test
  std::size_t min_length = 8;
  std::size_t max_length = 32;
  data::Padding padding = data::Padding::kZero;
  double pad_noise = 1.0;
  double walk_step = 0.08;
  double frame_noise = 0.02;
  std::array<double, 3> channel_weight = {1.0, 1.0, 1.0};
  /// Videos carry frame descriptors (MMA input) instead of affect vectors.
  bool raw_features = false;
  std::size_t feature_dim = 64;
  double feature_noise = 0.05;
  double au_flip = 0.0;
  std::array<double, 4> frame_mix = {0.0, 0.0, 0.0, 1.0};
  std::uint64_t structure_seed = 1;
};

struct TrainConfig {
  Stage stage = Stage::kMrnnFrozen;
  std::size_t epochs = 300;
  std::size_t batch = 16;
  double lr = 1e-3;
  double end_to_end_lr = 1e-5;
  /// Mini-batches pooled into one Pearson loss evaluation.
  std::size_t pearson_window = 1;
};

struct PathConfig {
  std::string data = "data";
  std::string out = "run";
  /// Trained MMA used by mrnn-frozen on raw videos and to start end-to-end.
  std::string mma_checkpoint;
  /// Aggregator checkpoint that end-to-end training starts from.
  std::string mrnn_checkpoint;
};

/// Every knob of a run. Values come from the preset, then the config file,
/// then command-line overrides, and are validated before any work starts.
struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 0;
  DataConfig data;
  mma::MmaConfig mma;       // input_dim follows data.feature_dim
  mrnn::MrnnConfig mrnn;    // input_dim follows the subset or MMA heads
  mrnn::LossKind loss = mrnn::LossKind::kPearson;
  Subset subset;
  TrainConfig train;
  PathConfig paths;

  data::VideoRecipe video_recipe() const;
  data::FrameRecipe frame_recipe() const;
  /// Learning rate of the configured stage.
  double stage_lr() const;
};

RunConfig preset(std::string_view name);

nlohmann::json to_json(const RunConfig& config);

/// Overlays `overrides` on the preset it names (or `base_preset`). Rejects
/// unknown keys and mistyped values with ConfigError, then validates.
RunConfig resolve_config(const nlohmann::json& overrides, std::string_view base_preset = "desk");

/// Parses "section.key=value" into a nested object; the value is read as
/// JSON when possible and as a string otherwise.
nlohmann::json parse_assignment(std::string_view assignment);

/// Throws ConfigError describing the first inconsistency.
void validate(const RunConfig& config);

}  // namespace feie::pipeline
