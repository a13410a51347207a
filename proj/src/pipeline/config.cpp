#include "feie/pipeline/config.hpp"

#include <cmath>

#include "feie/error.hpp"

namespace feie::pipeline {

using nlohmann::json;

namespace {

std::string padding_name(data::Padding p) { return p == data::Padding::kZero ? "zero" : "noise"; }

data::Padding parse_padding(const std::string& s) {
  if (s == "zero") return data::Padding::kZero;
  if (s == "noise") return data::Padding::kNoise;
  throw ConfigError("data.padding must be \"zero\" or \"noise\", got '" + s + "'");
}

std::string dm_name(mma::DmForm f) { return f == mma::DmForm::kPrinted ? "printed" : "full-bce"; }

mma::DmForm parse_dm(const std::string& s) {
  if (s == "printed") return mma::DmForm::kPrinted;
  if (s == "full-bce") return mma::DmForm::kFullBce;
  throw ConfigError("mma.dm_form must be \"printed\" or \"full-bce\", got '" + s + "'");
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // Integer slots only take integers; real slots take either.
    return !(a.is_number_integer() || a.is_number_unsigned()) || b.is_number_unsigned() ||
           (b.is_number_integer() && b.get<std::int64_t>() >= 0);
  }
  return a.type() == b.type();
}

void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    auto it = base.find(key);
    if (it == base.end()) throw ConfigError("unknown config key '" + path + "'");
    if (it->is_object()) {
      overlay(*it, value, path);
    } else if (it->is_array()) {
      if (!value.is_array() || value.size() != it->size()) {
        throw ConfigError("'" + path + "' must be an array of " + std::to_string(it->size()) + " numbers");
      }
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (!value[i].is_number()) throw ConfigError("'" + path + "' must hold numbers");
      }
      *it = value;
    } else {
      if (!same_kind(*it, value)) {
        throw ConfigError("'" + path + "' expects a value like " + it->dump() + ", got " + value.dump());
      }
      *it = value;
    }
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.preset = j.at("preset").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();

  const json& d = j.at("data");
  c.data.videos = d.at("videos").get<std::size_t>();
  c.data.frames = d.at("frames").get<std::size_t>();
  c.data.split = d.at("split").get<std::array<double, 3>>();
  c.data.min_length = d.at("min_length").get<std::size_t>();
  c.data.max_length = d.at("max_length").get<std::size_t>();
  c.data.padding = parse_padding(d.at("padding").get<std::string>());
  c.data.pad_noise = d.at("pad_noise").get<double>();
  c.data.walk_step = d.at("walk_step").get<double>();
  c.data.frame_noise = d.at("frame_noise").get<double>();
  c.data.channel_weight = d.at("channel_weight").get<std::array<double, 3>>();
  c.data.raw_features = d.at("raw_features").get<bool>();
  c.data.feature_dim = d.at("feature_dim").get<std::size_t>();
  c.data.feature_noise = d.at("feature_noise").get<double>();
  c.data.au_flip = d.at("au_flip").get<double>();
  c.data.frame_mix = d.at("frame_mix").get<std::array<double, 4>>();
  c.data.structure_seed = d.at("structure_seed").get<std::uint64_t>();

  const json& m = j.at("mma");
  c.mma.width = m.at("width").get<std::size_t>();
  c.mma.blocks = m.at("blocks").get<std::size_t>();
  c.mma.dm_form = parse_dm(m.at("dm_form").get<std::string>());
  c.mma.input_dim = c.data.feature_dim;

  const json& r = j.at("mrnn");
  c.mrnn.steps = r.at("steps").get<std::size_t>();
  c.mrnn.hidden = r.at("hidden").get<std::size_t>();
  c.mrnn.ff_units = r.at("ff_units").get<std::size_t>();
  c.mrnn.gru_layers = r.at("gru_layers").get<std::size_t>();
  c.mrnn.mask = r.at("mask").get<bool>();
  c.mrnn.sigmoid_output = r.at("sigmoid_output").get<bool>();
  try {
    c.loss = mrnn::parse_loss(r.at("loss").get<std::string>());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("mrnn.loss: ") + e.what());
  }
  c.subset = parse_subset(r.at("subset").get<std::string>());
  c.mrnn.input_dim = c.subset.width();

  const json& t = j.at("train");
  c.train.stage = parse_stage(t.at("stage").get<std::string>());
  c.train.epochs = t.at("epochs").get<std::size_t>();
  c.train.batch = t.at("batch").get<std::size_t>();
  c.train.lr = t.at("lr").get<double>();
  c.train.end_to_end_lr = t.at("end_to_end_lr").get<double>();
  c.train.pearson_window = t.at("pearson_window").get<std::size_t>();

  const json& p = j.at("paths");
  c.paths.data = p.at("data").get<std::string>();
  c.paths.out = p.at("out").get<std::string>();
  c.paths.mma_checkpoint = p.at("mma_checkpoint").get<std::string>();
  c.paths.mrnn_checkpoint = p.at("mrnn_checkpoint").get<std::string>();
  return c;
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kMma: return "mma";
    case Stage::kMrnnFrozen: return "mrnn-frozen";
    case Stage::kEndToEnd: return "end-to-end";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  if (name == "mma") return Stage::kMma;
  if (name == "mrnn-frozen") return Stage::kMrnnFrozen;
  if (name == "end-to-end") return Stage::kEndToEnd;
  throw ConfigError("unknown stage '" + std::string(name) +
                    "' (expected mma, mrnn-frozen or end-to-end)");
}

data::VideoRecipe RunConfig::video_recipe() const {
  data::VideoRecipe r;
  r.steps = mrnn.steps;
  r.min_length = data.min_length;
  r.max_length = data.max_length;
  r.padding = data.padding;
  r.pad_noise = data.pad_noise;
  r.walk_step = data.walk_step;
  r.frame_noise = data.frame_noise;
  r.channel_weight = data.channel_weight;
  r.raw_features = data.raw_features;
  r.structure_seed = data.structure_seed;
  r.frame = frame_recipe();
  return r;
}

data::FrameRecipe RunConfig::frame_recipe() const {
  data::FrameRecipe r;
  r.input_dim = data.feature_dim;
  r.feature_noise = data.feature_noise;
  r.au_flip = data.au_flip;
  r.mix = data.frame_mix;
  r.structure_seed = data.structure_seed;
  return r;
}

double RunConfig::stage_lr() const {
  return train.stage == Stage::kEndToEnd ? train.end_to_end_lr : train.lr;
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  if (name == "desk") {
    c.mrnn.steps = 32;
    c.mrnn.hidden = 16;
    c.mrnn.ff_units = 8;
    c.train.batch = 16;
    c.train.lr = 1e-3;
    c.data.min_length = 8;
    c.data.max_length = 32;
  } else if (name == "paper") {
    c.mrnn.steps = 480;
    c.mrnn.hidden = 128;
    c.mrnn.ff_units = 32;
    c.train.batch = 4;
    c.train.lr = 1e-4;
    c.data.min_length = 60;
    c.data.max_length = 480;
    c.data.split = {0.63, 0.19, 0.18};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper or desk)");
  }
  return c;
}

json to_json(const RunConfig& c) {
  return {
      {"schema_version", kConfigSchemaVersion},
      {"preset", c.preset},
      {"seed", c.seed},
      {"data",
       {{"videos", c.data.videos},
        {"frames", c.data.frames},
        {"split", c.data.split},
        {"min_length", c.data.min_length},
        {"max_length", c.data.max_length},
        {"padding", padding_name(c.data.padding)},
        {"pad_noise", c.data.pad_noise},
        {"walk_step", c.data.walk_step},
        {"frame_noise", c.data.frame_noise},
        {"channel_weight", c.data.channel_weight},
        {"raw_features", c.data.raw_features},
        {"feature_dim", c.data.feature_dim},
        {"feature_noise", c.data.feature_noise},
        {"au_flip", c.data.au_flip},
        {"frame_mix", c.data.frame_mix},
        {"structure_seed", c.data.structure_seed}}},
      {"mma", {{"width", c.mma.width}, {"blocks", c.mma.blocks}, {"dm_form", dm_name(c.mma.dm_form)}}},
      {"mrnn",
       {{"steps", c.mrnn.steps},
        {"hidden", c.mrnn.hidden},
        {"ff_units", c.mrnn.ff_units},
        {"gru_layers", c.mrnn.gru_layers},
        {"mask", c.mrnn.mask},
        {"sigmoid_output", c.mrnn.sigmoid_output},
        {"loss", std::string(mrnn::loss_name(c.loss))},
        {"subset", subset_name(c.subset)}}},
      {"train",
       {{"stage", std::string(stage_name(c.train.stage))},
        {"epochs", c.train.epochs},
        {"batch", c.train.batch},
        {"lr", c.train.lr},
        {"end_to_end_lr", c.train.end_to_end_lr},
        {"pearson_window", c.train.pearson_window}}},
      {"paths",
       {{"data", c.paths.data},
        {"out", c.paths.out},
        {"mma_checkpoint", c.paths.mma_checkpoint},
        {"mrnn_checkpoint", c.paths.mrnn_checkpoint}}},
  };
}

RunConfig resolve_config(const json& overrides, std::string_view base_preset) {
  if (!overrides.is_null() && !overrides.is_object()) throw ConfigError("config must be an object");
  std::string name(base_preset);
  if (overrides.is_object() && overrides.contains("preset")) {
    if (!overrides["preset"].is_string()) throw ConfigError("'preset' must be a string");
    name = overrides["preset"].get<std::string>();
  }
  json merged = to_json(preset(name));
  if (overrides.is_object()) {
    json patch = overrides;
    if (patch.contains("schema_version")) {
      if (patch["schema_version"] != kConfigSchemaVersion) {
        throw ConfigError("unsupported config schema_version " + patch["schema_version"].dump());
      }
      patch.erase("schema_version");
    }
    overlay(merged, patch, "");
  }
  RunConfig c;
  try {
    c = from_json(merged);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

json parse_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json out = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    out = json{{*it, out}};
  }
  return out;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  const auto& d = c.data;
  if (d.videos < 3) fail("data.videos must be at least 3");
  if (d.frames < 3) fail("data.frames must be at least 3");
  double total = 0.0;
  for (double f : d.split) {
    if (!(f > 0.0)) fail("data.split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("data.split fractions must sum to 1");
  total = 0.0;
  for (double f : d.frame_mix) {
    if (!(f >= 0.0)) fail("data.frame_mix fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("data.frame_mix fractions must sum to 1");
  if (d.min_length < 1) fail("data.min_length must be at least 1");
  if (d.min_length > d.max_length) fail("data.min_length exceeds data.max_length");
  if (d.max_length > c.mrnn.steps) {
    fail("data.max_length " + std::to_string(d.max_length) + " exceeds mrnn.steps (t = " +
         std::to_string(c.mrnn.steps) + ")");
  }
  if (!(d.pad_noise >= 0.0) || !(d.walk_step >= 0.0) || !(d.frame_noise >= 0.0) ||
      !(d.feature_noise >= 0.0)) {
    fail("noise levels must be non-negative");
  }
  if (!(d.au_flip >= 0.0 && d.au_flip <= 1.0)) fail("data.au_flip must lie in [0, 1]");
  double weight = 0.0;
  for (double w : d.channel_weight) {
    if (!(w >= 0.0)) fail("data.channel_weight entries must be non-negative");
    weight += w;
  }
  if (!(weight > 0.0)) fail("data.channel_weight needs a positive entry");
  if (d.feature_dim == 0) fail("data.feature_dim must be positive");

  if (c.mma.width == 0) fail("mma.width must be positive");
  if (c.mrnn.steps == 0 || c.mrnn.hidden == 0 || c.mrnn.ff_units == 0) {
    fail("mrnn.steps, mrnn.hidden and mrnn.ff_units must be positive");
  }
  if (c.mrnn.gru_layers < 1 || c.mrnn.gru_layers > 2) fail("mrnn.gru_layers must be 1 or 2");

  if (c.train.batch < 2) fail("train.batch must be at least 2 (batch correlation needs two rows)");
  if (c.train.pearson_window < 1) fail("train.pearson_window must be at least 1");
  if (!(c.train.lr >= 0.0) || !(c.train.end_to_end_lr >= 0.0)) fail("learning rates must be non-negative");
  if (c.train.stage == Stage::kEndToEnd && !d.raw_features) {
    fail("stage end-to-end trains on frame descriptors; set data.raw_features = true");
  }
  if (c.paths.out.empty()) fail("paths.out must be set");
}

}  // namespace feie::pipeline
