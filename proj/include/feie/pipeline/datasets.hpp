#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "feie/data/samples.hpp"
#include "feie/data/synthetic.hpp"
#include "feie/pipeline/config.hpp"

namespace feie::pipeline {

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

// On-disk layout under paths.data:
//   videos/{train,val,test}.jsonl  videos/manifest.json
//   frames/{train,val,test}.jsonl  frames/manifest.json

struct VideoSplits {
  std::vector<data::VideoSample> train, val, test;
  data::DatasetManifest manifest;
  const std::vector<data::VideoSample>& get(std::string_view split) const;
};

struct FrameSplits {
  std::vector<data::FrameSample> train, val, test;
  data::DatasetManifest manifest;
  const std::vector<data::FrameSample>& get(std::string_view split) const;
};

/// Generates and partitions both datasets in memory. Video and frame sets
/// use independent streams derived from config.seed.
VideoSplits make_videos(const RunConfig& config);
FrameSplits make_frames(const RunConfig& config);

/// Writes both datasets and their manifests under `dir`.
void write_datasets(const std::filesystem::path& dir, const VideoSplits& videos,
                    const FrameSplits& frames);

VideoSplits read_videos(const std::filesystem::path& dir);
FrameSplits read_frames(const std::filesystem::path& dir);

/// Raises ConfigError if a dataset on disk disagrees with the run config.
void check_video_manifest(const data::DatasetManifest& m, const RunConfig& config);

}  // namespace feie::pipeline
