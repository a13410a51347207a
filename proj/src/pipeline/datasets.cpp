#include "feie/pipeline/datasets.hpp"

#include "feie/data/io.hpp"
#include "feie/data/split.hpp"
#include "feie/error.hpp"

namespace feie::pipeline {

namespace fs = std::filesystem;

namespace {

template <typename T>
const std::vector<T>& pick(std::string_view split, const std::vector<T>& train,
                           const std::vector<T>& val, const std::vector<T>& test) {
  if (split == "train") return train;
  if (split == "val") return val;
  if (split == "test") return test;
  throw ConfigError("unknown split '" + std::string(split) + "' (expected train, val or test)");
}

void set_counts(data::DatasetManifest& m, std::size_t train, std::size_t val, std::size_t test) {
  m.counts = {{"train", train}, {"val", val}, {"test", test}};
}

}  // namespace

const std::vector<data::VideoSample>& VideoSplits::get(std::string_view split) const {
  return pick(split, train, val, test);
}

const std::vector<data::FrameSample>& FrameSplits::get(std::string_view split) const {
  return pick(split, train, val, test);
}

VideoSplits make_videos(const RunConfig& config) {
  auto ds = data::gen_video_dataset(data::derive_seed(config.seed, 1), config.data.videos,
                                    config.video_recipe());
  auto parts = data::split(ds.samples, config.data.split, data::derive_seed(config.seed, 2));
  VideoSplits out{std::move(parts[0]), std::move(parts[1]), std::move(parts[2]), std::move(ds.manifest)};
  out.manifest.seed = config.seed;
  set_counts(out.manifest, out.train.size(), out.val.size(), out.test.size());
  return out;
}

FrameSplits make_frames(const RunConfig& config) {
  auto ds = data::gen_frame_dataset(data::derive_seed(config.seed, 3), config.data.frames,
                                    config.frame_recipe());
  auto parts = data::split(ds.samples, config.data.split, data::derive_seed(config.seed, 4));
  FrameSplits out{std::move(parts[0]), std::move(parts[1]), std::move(parts[2]), std::move(ds.manifest)};
  out.manifest.seed = config.seed;
  set_counts(out.manifest, out.train.size(), out.val.size(), out.test.size());
  return out;
}

void write_datasets(const fs::path& dir, const VideoSplits& videos, const FrameSplits& frames) {
  for (auto split : kSplitNames) {
    data::write_videos(dir / "videos" / (std::string(split) + ".jsonl"), videos.get(split));
    data::write_frames(dir / "frames" / (std::string(split) + ".jsonl"), frames.get(split));
  }
  data::write_manifest(dir / "videos" / "manifest.json", videos.manifest);
  data::write_manifest(dir / "frames" / "manifest.json", frames.manifest);
}

VideoSplits read_videos(const fs::path& dir) {
  VideoSplits out;
  out.manifest = data::read_manifest(dir / "videos" / "manifest.json");
  out.train = data::read_videos(dir / "videos" / "train.jsonl");
  out.val = data::read_videos(dir / "videos" / "val.jsonl");
  out.test = data::read_videos(dir / "videos" / "test.jsonl");
  return out;
}

FrameSplits read_frames(const fs::path& dir) {
  FrameSplits out;
  out.manifest = data::read_manifest(dir / "frames" / "manifest.json");
  out.train = data::read_frames(dir / "frames" / "train.jsonl");
  out.val = data::read_frames(dir / "frames" / "val.jsonl");
  out.test = data::read_frames(dir / "frames" / "test.jsonl");
  return out;
}

void check_video_manifest(const data::DatasetManifest& m, const RunConfig& config) {
  if (m.kind != "videos") throw ConfigError("video manifest has kind '" + m.kind + "'");
  if (m.steps != config.mrnn.steps) {
    throw ConfigError("dataset has t = " + std::to_string(m.steps) + " but mrnn.steps is " +
                      std::to_string(config.mrnn.steps));
  }
  const std::size_t expected = config.data.raw_features ? config.data.feature_dim : kAffectDim;
  if (m.dim != expected) {
    throw ConfigError("dataset frames are " + std::to_string(m.dim) + "-dim, config expects " +
                      std::to_string(expected));
  }
}

}  // namespace feie::pipeline
