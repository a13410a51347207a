#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "feie/data/samples.hpp"
#include "feie/pipeline/checkpoint.hpp"
#include "feie/pipeline/config.hpp"
#include "feie/pipeline/datasets.hpp"

namespace feie::pipeline {

struct EpochRecord {
  std::size_t epoch = 0;     // 0 is the untrained model
  double train_loss = 0.0;   // mean over the epoch's batches; NaN at epoch 0
  double val_loss = 0.0;
  double val_metric = 0.0;   // mean ρ, or L_MMA for the mma stage
};

struct TrainResult {
  Checkpoint checkpoint;  // best validation epoch
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  std::string metric_name;  // "val_mean_rho" or "val_loss_mma"
};

/// Model-shaping fields of `config` for the stage; stored in checkpoints and
/// compared on load.
nlohmann::json model_spec(const RunConfig& config);

/// Raises ConfigError when the checkpoint was trained with a different model.
void check_compatible(const Checkpoint& ckpt, const RunConfig& config);

/// Multi-task head on frame samples; keeps the epoch with the lowest
/// validation L_MMA.
TrainResult train_mma(const RunConfig& config, const FrameSplits& frames);

/// Aggregator (mrnn-frozen) or joint (end-to-end) training on the video
/// splits; keeps the epoch with the highest validation mean ρ. `mma` holds
/// the MMA checkpoint the stage needs, if any.
TrainResult train_videos(const RunConfig& config, const VideoSplits& videos,
                         const Checkpoint* mma, const Checkpoint* mrnn_init = nullptr);

/// Dispatches on config.train.stage, loading datasets and checkpoints from
/// the configured paths.
TrainResult train_stage(const RunConfig& config);

/// Intensity predictions of a video checkpoint (either stage).
Tensor predict_videos(const Checkpoint& ckpt, const RunConfig& config,
                      std::span<const data::VideoSample> videos);

/// Aggregator inputs for the frozen stage: the subset's channels of either
/// the stored affect vectors or a frozen MMA's outputs.
std::vector<data::VideoSample> aggregator_inputs(const RunConfig& config,
                                                 std::span<const data::VideoSample> videos,
                                                 const TensorMap* mma_params);

/// Per-epoch table: schema line, header, one row per epoch.
std::string curve_csv(const TrainResult& result);
/// Loss and validation metric against epoch as a standalone SVG.
std::string curve_svg(const TrainResult& result);

}  // namespace feie::pipeline
