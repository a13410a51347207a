#include "feie/pipeline/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "feie/data/io.hpp"
#include "feie/error.hpp"

namespace feie::pipeline {

namespace {

constexpr char kMagic[8] = {'F', 'E', 'I', 'E', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v;
  std::memcpy(&v, in.data() + at, 8);
  return v;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.params) arrays.push_back({{"name", name}, {"shape", t.shape()}});
  const nlohmann::json header = {{"schema_version", kCheckpointSchemaVersion},
                                 {"model", ckpt.model},
                                 {"info", ckpt.info},
                                 {"arrays", arrays}};
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& [name, t] : ckpt.params) {
    out.append(reinterpret_cast<const char*>(t.values().data()), t.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError("not a checkpoint file");
  }
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) throw IoError("checkpoint header is truncated");
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len), nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw IoError("checkpoint header is not valid JSON");

  Checkpoint ckpt;
  std::size_t offset = 16 + header_len;
  try {
    if (header.at("schema_version") != kCheckpointSchemaVersion) {
      throw IoError("unsupported checkpoint schema_version " + header.at("schema_version").dump());
    }
    ckpt.model = header.at("model");
    ckpt.info = header.at("info");
    for (const auto& a : header.at("arrays")) {
      const auto name = a.at("name").get<std::string>();
      const auto shape = a.at("shape").get<Shape>();
      if (shape.empty()) throw IoError("array '" + name + "' has an empty shape");
      const std::size_t n = shape_size(shape);
      if (n * sizeof(double) > bytes.size() - offset) throw IoError("checkpoint data is truncated");
      std::vector<double> values(n);
      std::memcpy(values.data(), bytes.data() + offset, n * sizeof(double));
      offset += n * sizeof(double);
      ckpt.params.emplace(name, Tensor(shape, std::move(values)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ShapeError& e) {
    throw IoError(std::string("malformed checkpoint array: ") + e.what());
  }
  if (offset != bytes.size()) throw IoError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  data::write_text(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(data::read_text(path));
  } catch (const IoError& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace feie::pipeline
