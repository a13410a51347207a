#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "feie/tensor.hpp"

namespace feie::pipeline {

inline constexpr std::string_view kCheckpointSchemaVersion = "1";

/// Trained arrays plus the metadata needed to rebuild the model.
struct Checkpoint {
  /// Model-shaping part of the run config, compared on load.
  nlohmann::json model;
  /// Free-form training record (epoch, validation metric).
  nlohmann::json info;
  TensorMap params;

  bool operator==(const Checkpoint&) const = default;
};

// Layout: 8-byte magic "FEIECKPT", uint64 header length, JSON header
// {schema_version, model, info, arrays: [{name, shape}]}, then every array's
// values as little-endian IEEE-754 doubles in header order. Values round-trip
// bit for bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// IoError when the file is unreadable, truncated or not a checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace feie::pipeline
