#include "feie/data/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "feie/error.hpp"

namespace feie::data {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw ValidationError("field '" + field + "' " + why);
}

const json& field(const json& j, const std::string& name) {
  auto it = j.find(name);
  if (it == j.end()) bad_field(name, "is missing");
  return *it;
}

std::vector<double> real_array(const json& j, const std::string& name) {
  if (!j.is_array()) bad_field(name, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) bad_field(name, "must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const std::string& name) {
  const auto v = real_array(j, name);
  if (v.size() != N) {
    bad_field(name, "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(N));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

bool mask_bit(const json& mask, const std::string& name) {
  const json& b = field(mask, name);
  if (!b.is_boolean()) bad_field("label_mask." + name, "must be a boolean");
  return b.get<bool>();
}

// Present labels must agree with the mask; absent ones are null.
const json* label_slot(const json& labels, const json& mask, const std::string& name) {
  const bool on = mask_bit(mask, name);
  auto it = labels.find(name);
  const bool present = it != labels.end() && !it->is_null();
  if (on != present) bad_field(name, on ? "is masked in but missing" : "is masked out but present");
  return present ? &*it : nullptr;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void close_checked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

template <typename T, typename Parse>
std::vector<T> read_records(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(number);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw IoError(where + ": malformed record");
    try {
      out.push_back(parse(j));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return out;
}

template <typename T, typename Record>
void write_records(const std::filesystem::path& path, const std::vector<T>& samples, Record record) {
  auto out = open_out(path);
  for (const auto& s : samples) out << record(s).dump() << '\n';
  close_checked(out, path);
}

}  // namespace

json frame_record(const FrameSample& s) {
  json labels = {{"va", nullptr}, {"expr", nullptr}, {"au", nullptr}};
  if (s.va) labels["va"] = *s.va;
  if (s.expr) {
    std::array<double, kNumExpressions> onehot{};
    onehot[static_cast<std::size_t>(*s.expr)] = 1.0;
    labels["expr"] = onehot;
  }
  if (s.au) labels["au"] = *s.au;
  return {{"id", s.id},
          {"features", s.features},
          {"labels", labels},
          {"label_mask", {{"va", s.va.has_value()}, {"expr", s.expr.has_value()}, {"au", s.au.has_value()}}}};
}

FrameSample parse_frame_record(const json& j) {
  FrameSample s;
  const json& id = field(j, "id");
  if (!id.is_string()) bad_field("id", "must be a string");
  s.id = id.get<std::string>();
  s.features = real_array(field(j, "features"), "features");
  const json& labels = field(j, "labels");
  const json& mask = field(j, "label_mask");
  if (!labels.is_object()) bad_field("labels", "must be an object");
  if (!mask.is_object()) bad_field("label_mask", "must be an object");

  if (const json* va = label_slot(labels, mask, "va")) s.va = fixed_array<2>(*va, "va");
  if (const json* expr = label_slot(labels, mask, "expr")) {
    const auto p = fixed_array<kNumExpressions>(*expr, "expr");
    double total = 0.0;
    std::size_t hot = kNumExpressions;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] >= 0.0 && p[i] <= 1.0)) bad_field("expr", "has an entry outside [0, 1]");
      total += p[i];
      if (p[i] == 1.0) hot = i;
    }
    if (std::abs(total - 1.0) > 1e-9) bad_field("expr", "sums to " + std::to_string(total) + ", expected 1");
    if (hot == kNumExpressions) bad_field("expr", "is not a one-hot class label");
    s.expr = static_cast<int>(hot);
  }
  if (const json* au = label_slot(labels, mask, "au")) {
    const auto v = fixed_array<kNumActionUnits>(*au, "au");
    std::array<int, kNumActionUnits> bits{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] != 0.0 && v[i] != 1.0) bad_field("au", "is not binary");
      bits[i] = static_cast<int>(v[i]);
    }
    s.au = bits;
  }
  validate(s);
  return s;
}

json video_record(const VideoSample& s) {
  json frames = json::array();
  for (std::size_t r = 0; r < s.frames.rows(); ++r) frames.push_back(s.frames.row(r));
  return {{"id", s.id},
          {"frames", frames},
          {"length", s.length},
          {"labels", s.label},
          {"label_mask", {{"intensity", true}}},
          {"padding", s.padding == Padding::kZero ? "zero" : "noise"}};
}

VideoSample parse_video_record(const json& j) {
  VideoSample s;
  const json& id = field(j, "id");
  if (!id.is_string()) bad_field("id", "must be a string");
  s.id = id.get<std::string>();

  const json& frames = field(j, "frames");
  if (!frames.is_array() || frames.empty()) bad_field("frames", "must be a non-empty array of rows");
  std::vector<double> values;
  std::size_t d = 0;
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const auto row = real_array(frames[r], "frames");
    if (r == 0) d = row.size();
    if (row.empty() || row.size() != d) bad_field("frames", "row " + std::to_string(r) + " has a different width");
    values.insert(values.end(), row.begin(), row.end());
  }
  s.frames = Tensor({frames.size(), d}, std::move(values));

  const json& length = field(j, "length");
  if (!length.is_number_unsigned()) bad_field("length", "must be a non-negative integer");
  s.length = length.get<std::size_t>();
  if (s.length > s.frames.rows()) {
    bad_field("length", std::to_string(s.length) + " exceeds padded length t = " +
                            std::to_string(s.frames.rows()));
  }
  s.label = fixed_array<kNumIntensities>(field(j, "labels"), "labels");
  const json& mask = field(j, "label_mask");
  if (!mask.is_object() || !mask_bit(mask, "intensity")) bad_field("label_mask", "must mark the intensity label");

  const json& padding = field(j, "padding");
  if (padding == "zero") {
    s.padding = Padding::kZero;
  } else if (padding == "noise") {
    s.padding = Padding::kNoise;
  } else {
    bad_field("padding", "must be \"zero\" or \"noise\"");
  }
  validate(s);
  return s;
}

void write_frames(const std::filesystem::path& path, const std::vector<FrameSample>& samples) {
  write_records(path, samples, frame_record);
}

std::vector<FrameSample> read_frames(const std::filesystem::path& path) {
  return read_records<FrameSample>(path, parse_frame_record);
}

void write_videos(const std::filesystem::path& path, const std::vector<VideoSample>& samples) {
  write_records(path, samples, video_record);
}

std::vector<VideoSample> read_videos(const std::filesystem::path& path) {
  return read_records<VideoSample>(path, parse_video_record);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  close_checked(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  write_text(path, to_json(m).dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw IoError("'" + path.string() + "' is not valid JSON");
  return manifest_from_json(j);
}

}  // namespace feie::data
