#pragma once

#include <filesystem>
#include <vector>

#include "feie/data/samples.hpp"
#include "feie/data/synthetic.hpp"

namespace feie::data {

// Line-delimited records, one JSON object per line.
//
// frame:  {"id", "features": [d], "labels": {"va": [2], "expr": [7], "au": [17]},
//          "label_mask": {"va", "expr", "au"}}   absent labels are null
// video:  {"id", "frames": [[d] x t], "length", "labels": [7],
//          "label_mask": {"intensity"}, "padding": "zero" | "noise"}
//
// Readers validate every record. A line that is not a JSON object raises
// IoError with its line number; a record that breaks an invariant raises
// ValidationError naming the line and the field.

void write_frames(const std::filesystem::path& path, const std::vector<FrameSample>& samples);
std::vector<FrameSample> read_frames(const std::filesystem::path& path);

void write_videos(const std::filesystem::path& path, const std::vector<VideoSample>& samples);
std::vector<VideoSample> read_videos(const std::filesystem::path& path);

nlohmann::json frame_record(const FrameSample& s);
FrameSample parse_frame_record(const nlohmann::json& j);
nlohmann::json video_record(const VideoSample& s);
VideoSample parse_video_record(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes `text` to `path`, raising IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace feie::data
