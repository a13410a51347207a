#include "feie/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "feie/data/split.hpp"
#include "feie/error.hpp"
#include "feie/mma/relatedness.hpp"

namespace feie::data {

namespace {

constexpr std::size_t kVa = 2;
constexpr std::size_t kExprBegin = 2;
constexpr std::size_t kAuBegin = 2 + kNumExpressions;

// Valence-arousal centroid of each expression class, storage order.
constexpr std::array<std::array<double, 2>, kNumExpressions> kVaCentroid = {{
    {-0.5, 0.6},   // anger
    {-0.6, 0.3},   // disgust
    {-0.4, 0.7},   // fear
    {0.7, 0.4},    // happiness
    {-0.6, -0.4},  // sadness
    {0.2, 0.8},    // surprise
    {0.0, 0.0},    // neutral
}};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

const mma::RelatednessMatrix& relatedness() {
  static const mma::RelatednessMatrix m = mma::build_relatedness();
  return m;
}

std::vector<std::string> frame_label_order() {
  std::vector<std::string> order{"va:valence", "va:arousal"};
  for (auto n : kExpressionNames) order.push_back("expr:" + std::string(n));
  for (int au : kActionUnits) order.push_back("au:AU" + std::to_string(au));
  return order;
}

std::vector<std::string> intensity_order() {
  return {kIntensityNames.begin(), kIntensityNames.end()};
}

// Gaussian projection of the affect space into descriptor space.
Tensor projection(const FrameRecipe& recipe) {
  std::mt19937_64 rng(derive_seed(recipe.structure_seed, 0xF7A3));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(kAffectDim)));
  Tensor p({recipe.input_dim, kAffectDim});
  for (double& v : p.values()) v = normal(rng);
  return p;
}

struct VideoStructure {
  // Expression logits contributed by valence-arousal: 7 × 2.
  std::array<std::array<double, 2>, kNumExpressions> prototypes{};
  // Label read-out directions over the 26 affect means: 7 × 26.
  std::array<std::array<double, kAffectDim>, kNumIntensities> directions{};
  // Per label and channel: centre and scale of the channel score.
  std::array<std::array<double, 3>, kNumIntensities> centre{};
  std::array<std::array<double, 3>, kNumIntensities> scale{};
};

constexpr std::array<std::pair<std::size_t, std::size_t>, 3> kChannels = {
    {{0, kVa}, {kExprBegin, kAuBegin}, {kAuBegin, kAffectDim}}};

// Affect rows for the first `length` frames of one video.
Tensor simulate_affect(std::mt19937_64& rng, std::size_t steps, std::size_t length,
                       const VideoRecipe& recipe, const VideoStructure& s) {
  std::uniform_real_distribution<double> start(-0.6, 0.6);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::array<double, 2> va = {start(rng), start(rng)};
  std::array<double, kNumExpressions> bias{};
  for (double& b : bias) b = normal(rng);
  std::array<double, kNumActionUnits> offset{};
  for (double& o : offset) o = 0.15 * normal(rng);

  Tensor affect({steps, kAffectDim}, 0.0);
  for (std::size_t k = 0; k < length; ++k) {
    if (k > 0) {
      for (double& v : va) v = clamp(v + recipe.walk_step * normal(rng), -1.0, 1.0);
    }
    std::array<double, kNumExpressions> logits{};
    double mx = -1e300;
    for (std::size_t e = 0; e < kNumExpressions; ++e) {
      logits[e] = bias[e] + s.prototypes[e][0] * va[0] + s.prototypes[e][1] * va[1];
      mx = std::max(mx, logits[e]);
    }
    double total = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      total += l;
    }
    std::array<double, kNumExpressions> expr{};
    for (std::size_t e = 0; e < kNumExpressions; ++e) expr[e] = logits[e] / total;
    const auto pseudo = mma::pseudo_au(expr, relatedness());

    for (std::size_t i = 0; i < kVa; ++i) {
      affect.at(k, i) = clamp(va[i] + recipe.frame_noise * normal(rng), -1.0, 1.0);
    }
    for (std::size_t e = 0; e < kNumExpressions; ++e) affect.at(k, kExprBegin + e) = expr[e];
    for (std::size_t a = 0; a < kNumActionUnits; ++a) {
      const double v = 0.6 * pseudo[a] + 0.2 + offset[a] + recipe.frame_noise * normal(rng);
      affect.at(k, kAuBegin + a) = clamp(v, 0.0, 1.0);
    }
  }
  return affect;
}

std::array<double, kAffectDim> prefix_means(const Tensor& affect, std::size_t length) {
  std::array<double, kAffectDim> m{};
  for (std::size_t k = 0; k < length; ++k) {
    for (std::size_t c = 0; c < kAffectDim; ++c) m[c] += affect.at(k, c);
  }
  for (double& v : m) v /= static_cast<double>(length);
  return m;
}

double channel_score(const VideoStructure& s, std::size_t label, std::size_t channel,
                     const std::array<double, kAffectDim>& means) {
  double score = 0.0;
  for (std::size_t c = kChannels[channel].first; c < kChannels[channel].second; ++c) {
    score += s.directions[label][c] * means[c];
  }
  return score;
}

VideoStructure build_structure(const VideoRecipe& recipe) {
  VideoStructure s;
  std::mt19937_64 rng(derive_seed(recipe.structure_seed, 0x5EED));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& p : s.prototypes) {
    for (double& v : p) v = 1.5 * normal(rng);
  }
  for (auto& d : s.directions) {
    for (double& v : d) v = normal(rng);
  }
  // Calibrate every channel score to zero mean and unit spread on a pilot
  // population, so the channel weights alone set each channel's influence.
  constexpr std::size_t kPilot = 512;
  std::array<std::array<std::vector<double>, 3>, kNumIntensities> scores;
  std::uniform_int_distribution<std::size_t> len(recipe.min_length, recipe.max_length);
  for (std::size_t i = 0; i < kPilot; ++i) {
    std::mt19937_64 vrng(derive_seed(recipe.structure_seed ^ 0xC0FFEE, i));
    const std::size_t l = len(vrng);
    const Tensor affect = simulate_affect(vrng, recipe.max_length, l, recipe, s);
    const auto means = prefix_means(affect, l);
    for (std::size_t j = 0; j < kNumIntensities; ++j) {
      for (std::size_t ch = 0; ch < 3; ++ch) scores[j][ch].push_back(channel_score(s, j, ch, means));
    }
  }
  for (std::size_t j = 0; j < kNumIntensities; ++j) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const auto& v = scores[j][ch];
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      var /= static_cast<double>(v.size());
      s.centre[j][ch] = m;
      s.scale[j][ch] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
  }
  return s;
}

const VideoStructure& structure_for(const VideoRecipe& recipe) {
  static std::mutex mutex;
  static std::map<std::string, VideoStructure> cache;
  nlohmann::json key = {{"seed", recipe.structure_seed},
                        {"min", recipe.min_length},
                        {"max", recipe.max_length},
                        {"walk", recipe.walk_step},
                        {"noise", recipe.frame_noise}};
  const std::string k = key.dump();
  std::lock_guard lock(mutex);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, build_structure(recipe)).first;
  return it->second;
}

std::array<double, kNumIntensities> labels_from(const VideoStructure& s, const Tensor& affect,
                                                std::size_t length, const VideoRecipe& recipe) {
  const auto means = prefix_means(affect, length);
  double norm = 0.0;
  for (double w : recipe.channel_weight) norm += w * w;
  if (!(norm > 0.0)) throw ValidationError("at least one channel weight must be non-zero");
  norm = std::sqrt(norm);
  std::array<double, kNumIntensities> out{};
  for (std::size_t j = 0; j < kNumIntensities; ++j) {
    double z = 0.0;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      z += recipe.channel_weight[ch] * (channel_score(s, j, ch, means) - s.centre[j][ch]) /
           s.scale[j][ch];
    }
    out[j] = 1.0 / (1.0 + std::exp(-1.5 * z / norm));
  }
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over a golden-ratio stride.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [name, n] : m.counts) counts.push_back({{"split", name}, {"count", n}});
  return {{"schema_version", m.schema_version}, {"kind", m.kind},
          {"seed", m.seed},                     {"counts", counts},
          {"steps", m.steps},                   {"dim", m.dim},
          {"label_order", m.label_order},       {"recipe", m.recipe},
          {"recipe_params", m.recipe_params}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<std::string>();
    if (m.schema_version != kDataSchemaVersion) {
      throw ValidationError("unsupported manifest schema version '" + m.schema_version + "'");
    }
    m.kind = j.at("kind").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& c : j.at("counts")) {
      m.counts.emplace_back(c.at("split").get<std::string>(), c.at("count").get<std::size_t>());
    }
    m.steps = j.at("steps").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.label_order = j.at("label_order").get<std::vector<std::string>>();
    m.recipe = j.at("recipe").get<std::string>();
    m.recipe_params = j.at("recipe_params");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

nlohmann::json FrameRecipe::to_json() const {
  return {{"input_dim", input_dim}, {"feature_noise", feature_noise}, {"au_flip", au_flip},
          {"mix", mix},             {"structure_seed", structure_seed}};
}

FrameRecipe FrameRecipe::from_json(const nlohmann::json& j) {
  FrameRecipe r;
  r.input_dim = j.at("input_dim").get<std::size_t>();
  r.feature_noise = j.at("feature_noise").get<double>();
  r.au_flip = j.at("au_flip").get<double>();
  r.mix = j.at("mix").get<std::array<double, 4>>();
  r.structure_seed = j.at("structure_seed").get<std::uint64_t>();
  return r;
}

nlohmann::json VideoRecipe::to_json() const {
  return {{"steps", steps},
          {"min_length", min_length},
          {"max_length", max_length},
          {"padding", padding == Padding::kZero ? "zero" : "noise"},
          {"pad_noise", pad_noise},
          {"walk_step", walk_step},
          {"frame_noise", frame_noise},
          {"channel_weight", channel_weight},
          {"raw_features", raw_features},
          {"structure_seed", structure_seed},
          {"frame", frame.to_json()}};
}

VideoRecipe VideoRecipe::from_json(const nlohmann::json& j) {
  VideoRecipe r;
  r.steps = j.at("steps").get<std::size_t>();
  r.min_length = j.at("min_length").get<std::size_t>();
  r.max_length = j.at("max_length").get<std::size_t>();
  r.padding = j.at("padding").get<std::string>() == "noise" ? Padding::kNoise : Padding::kZero;
  r.pad_noise = j.at("pad_noise").get<double>();
  r.walk_step = j.at("walk_step").get<double>();
  r.frame_noise = j.at("frame_noise").get<double>();
  r.channel_weight = j.at("channel_weight").get<std::array<double, 3>>();
  r.raw_features = j.at("raw_features").get<bool>();
  r.structure_seed = j.at("structure_seed").get<std::uint64_t>();
  r.frame = FrameRecipe::from_json(j.at("frame"));
  return r;
}

std::vector<double> project_affect(std::span<const double> affect, const FrameRecipe& recipe) {
  static std::mutex mutex;
  static std::map<std::pair<std::uint64_t, std::size_t>, Tensor> cache;
  if (affect.size() != kAffectDim) throw ShapeError("affect rows must have 26 values");
  const Tensor* p = nullptr;
  {
    std::lock_guard lock(mutex);
    const auto key = std::make_pair(recipe.structure_seed, recipe.input_dim);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, projection(recipe)).first;
    p = &it->second;
  }
  std::vector<double> out(recipe.input_dim, 0.0);
  for (std::size_t i = 0; i < recipe.input_dim; ++i) {
    for (std::size_t j = 0; j < kAffectDim; ++j) out[i] += p->at(i, j) * affect[j];
  }
  return out;
}

FrameDataset gen_frame_dataset(std::uint64_t seed, std::size_t n, const FrameRecipe& recipe) {
  if (n == 0) throw ValidationError("dataset size must be at least 1");
  if (recipe.input_dim == 0) throw ValidationError("input_dim must be positive");

  // Exact per-kind quotas, assigned to samples in a seeded order.
  const auto quota = allocate_counts(n, recipe.mix);
  std::vector<int> kinds;
  for (std::size_t k = 0; k < quota.size(); ++k) kinds.insert(kinds.end(), quota[k], static_cast<int>(k));
  std::mt19937_64 order_rng(derive_seed(seed, 0xA11));
  std::shuffle(kinds.begin(), kinds.end(), order_rng);

  FrameDataset out;
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    std::uniform_int_distribution<int> cls(0, static_cast<int>(kNumExpressions) - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int c = cls(rng);
    std::array<double, 2> va{};
    for (std::size_t k = 0; k < 2; ++k) {
      va[k] = clamp(kVaCentroid[static_cast<std::size_t>(c)][k] + 0.2 * normal(rng), -1.0, 1.0);
    }
    std::array<int, kNumActionUnits> au{};
    for (std::size_t a = 0; a < kNumActionUnits; ++a) {
      au[a] = relatedness().related(static_cast<std::size_t>(c), a) ? 1 : 0;
      if (recipe.au_flip > 0.0 && unit(rng) < recipe.au_flip) au[a] = 1 - au[a];
    }

    std::vector<double> affect(kAffectDim, 0.0);
    affect[0] = va[0];
    affect[1] = va[1];
    affect[kExprBegin + static_cast<std::size_t>(c)] = 1.0;
    for (std::size_t a = 0; a < kNumActionUnits; ++a) affect[kAuBegin + a] = au[a];

    FrameSample s;
    s.id = "frame-" + std::to_string(i);
    s.features = project_affect(affect, recipe);
    for (double& v : s.features) v += recipe.feature_noise * normal(rng);
    const int kind = kinds[i];
    if (kind == 0 || kind == 3) s.va = va;
    if (kind == 1 || kind == 3) s.expr = c;
    if (kind == 2 || kind == 3) s.au = au;
    out.samples.push_back(std::move(s));
  }

  out.manifest.kind = "frames";
  out.manifest.seed = seed;
  out.manifest.counts = {{"all", n}};
  out.manifest.dim = recipe.input_dim;
  out.manifest.label_order = frame_label_order();
  out.manifest.recipe = std::string(FrameRecipe::kName);
  out.manifest.recipe_params = recipe.to_json();
  return out;
}

std::array<double, kNumIntensities> intensity_labels(const Tensor& affect, std::size_t length,
                                                     const VideoRecipe& recipe) {
  if (affect.cols() != kAffectDim) throw ShapeError("affect trajectory must have 26 columns");
  if (length < 1 || length > affect.rows()) throw ValidationError("length outside the trajectory");
  return labels_from(structure_for(recipe), affect, length, recipe);
}

VideoDataset gen_video_dataset(std::uint64_t seed, std::size_t n, const VideoRecipe& recipe) {
  if (n == 0) throw ValidationError("dataset size must be at least 1");
  if (recipe.max_length > recipe.steps) {
    throw ValidationError("max_length " + std::to_string(recipe.max_length) +
                          " exceeds padded length t = " + std::to_string(recipe.steps));
  }
  if (recipe.min_length < 1 || recipe.min_length > recipe.max_length) {
    throw ValidationError("length range must satisfy 1 <= min_length <= max_length");
  }
  const VideoStructure& s = structure_for(recipe);
  const std::size_t d = recipe.dim();

  VideoDataset out;
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    std::uniform_int_distribution<std::size_t> len(recipe.min_length, recipe.max_length);
    const std::size_t l = len(rng);
    const Tensor affect = simulate_affect(rng, recipe.steps, l, recipe, s);

    VideoSample v;
    v.id = "video-" + std::to_string(i);
    v.length = l;
    v.padding = recipe.padding;
    v.label = labels_from(s, affect, l, recipe);
    v.frames = Tensor({recipe.steps, d}, 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < l; ++k) {
      if (recipe.raw_features) {
        const auto row = affect.row(k);
        const auto x = project_affect(row, recipe.frame);
        for (std::size_t c = 0; c < d; ++c) {
          v.frames.at(k, c) = x[c] + recipe.frame.feature_noise * normal(rng);
        }
      } else {
        for (std::size_t c = 0; c < d; ++c) v.frames.at(k, c) = affect.at(k, c);
      }
    }
    if (recipe.padding == Padding::kNoise) {
      for (std::size_t k = l; k < recipe.steps; ++k) {
        for (std::size_t c = 0; c < d; ++c) v.frames.at(k, c) = recipe.pad_noise * normal(rng);
      }
    }
    out.samples.push_back(std::move(v));
  }

  out.manifest.kind = "videos";
  out.manifest.seed = seed;
  out.manifest.counts = {{"all", n}};
  out.manifest.steps = recipe.steps;
  out.manifest.dim = d;
  out.manifest.label_order = intensity_order();
  out.manifest.recipe = std::string(VideoRecipe::kName);
  out.manifest.recipe_params = recipe.to_json();
  return out;
}

}  // namespace feie::data
