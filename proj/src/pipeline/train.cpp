#include "feie/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "feie/autodiff/adam.hpp"
#include "feie/error.hpp"
#include "feie/metrics/report.hpp"
#include "feie/mma/model.hpp"
#include "feie/mrnn/model.hpp"
#include "feie/pipeline/representation.hpp"

namespace feie::pipeline {

using nlohmann::json;

namespace {

constexpr std::string_view kCurveSchemaVersion = "1";

json mma_json(const mma::MmaConfig& c) {
  return {{"input_dim", c.input_dim},
          {"width", c.width},
          {"blocks", c.blocks},
          {"dm_form", c.dm_form == mma::DmForm::kPrinted ? "printed" : "full-bce"}};
}

json mrnn_json(const mrnn::MrnnConfig& c) {
  return {{"steps", c.steps},          {"input_dim", c.input_dim},
          {"hidden", c.hidden},        {"ff_units", c.ff_units},
          {"gru_layers", c.gru_layers}, {"mask", c.mask},
          {"sigmoid_output", c.sigmoid_output}};
}

TensorMap with_prefix(const TensorMap& params, std::string_view prefix) {
  TensorMap out;
  for (const auto& [name, t] : params) {
    if (name.starts_with(prefix)) out.emplace(name, t);
  }
  return out;
}

// Consecutive batches over a fresh permutation; a trailing single sample
// joins the previous batch because batch correlation needs two rows.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t size, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + size)));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

struct LoopHooks {
  std::function<double(const std::vector<std::size_t>&)> step;
  std::function<std::pair<double, double>()> validate;  // (val loss, val metric)
  std::function<TensorMap()> snapshot;
  bool higher_is_better = true;
};

TrainResult run_loop(const RunConfig& config, std::size_t n_train, const LoopHooks& hooks,
                     json model, std::string metric_name) {
  TrainResult result;
  result.metric_name = std::move(metric_name);
  std::mt19937_64 rng(data::derive_seed(config.seed, 30));
  // Pearson statistics may span several mini-batches; the window widens the
  // batch the loss (and its gradient) is computed over.
  const std::size_t batch_size =
      config.train.batch * (config.loss == mrnn::LossKind::kPearson && config.train.stage != Stage::kMma
                                ? config.train.pearson_window
                                : 1);
  // Paths are left out so a checkpoint does not depend on where it was written.
  json settings = to_json(config);
  settings.erase("paths");

  auto record = [&](std::size_t epoch, double train_loss) {
    const auto [val_loss, metric] = hooks.validate();
    result.curve.push_back({epoch, train_loss, val_loss, metric});
    const double best = result.curve[result.best_epoch].val_metric;
    const bool improved = hooks.higher_is_better ? metric > best : metric < best;
    if (epoch == 0 || improved) {
      result.best_epoch = epoch;
      result.checkpoint.params = hooks.snapshot();
      result.checkpoint.info = {{"epoch", epoch}, {result.metric_name, metric}, {"config", settings}};
    }
  };

  record(0, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
    double total = 0.0;
    const auto plan = batches(n_train, batch_size, rng);
    for (std::size_t s = 0; s < plan.size(); ++s) {
      try {
        total += hooks.step(plan[s]);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", step " + std::to_string(s + 1) +
                           ": " + e.what());
      }
    }
    record(epoch, total / static_cast<double>(plan.size()));
  }
  result.checkpoint.model = std::move(model);
  return result;
}

std::pair<double, double> video_scores(const Tensor& preds, std::span<const data::VideoSample> videos,
                                       mrnn::LossKind kind) {
  const Tensor labels = mrnn::stack_labels(videos);
  const double loss = kind == mrnn::LossKind::kPearson ? mrnn::loss_pearson(preds, labels).value
                                                       : mrnn::loss_mse(preds, labels);
  const double rho = metrics::evaluate(preds, labels, metrics::TaskKind::kIntensity).mean_pearson;
  return {loss, rho};
}

const TensorMap* mma_params_for(const RunConfig& config, const Checkpoint* mma) {
  if (!config.data.raw_features) return nullptr;
  if (mma == nullptr) throw ConfigError("raw-feature videos need an MMA checkpoint");
  const json expected = mma_json(config.mma);
  if (!mma->model.contains("mma") || mma->model["mma"] != expected) {
    throw ConfigError("MMA checkpoint was trained with " +
                      (mma->model.contains("mma") ? mma->model["mma"].dump() : std::string("no MMA")) +
                      ", config expects " + expected.dump());
  }
  return &mma->params;
}

}  // namespace

json model_spec(const RunConfig& config) {
  json spec = {{"stage", stage_name(config.train.stage)}};
  if (config.train.stage == Stage::kMma) {
    spec["mma"] = mma_json(config.mma);
    return spec;
  }
  spec["mrnn"] = mrnn_json(config.mrnn);
  spec["subset"] = subset_name(config.subset);
  spec["loss"] = mrnn::loss_name(config.loss);
  spec["raw_features"] = config.data.raw_features;
  if (config.data.raw_features) spec["mma"] = mma_json(config.mma);
  return spec;
}

void check_compatible(const Checkpoint& ckpt, const RunConfig& config) {
  const json expected = model_spec(config);
  if (ckpt.model != expected) {
    throw ConfigError("checkpoint model " + ckpt.model.dump() + " does not match config " +
                      expected.dump());
  }
}

std::vector<data::VideoSample> aggregator_inputs(const RunConfig& config,
                                                 std::span<const data::VideoSample> videos,
                                                 const TensorMap* mma_params) {
  if (config.data.raw_features) {
    if (mma_params == nullptr) throw ConfigError("raw-feature videos need MMA parameters");
    return extract_affect(videos, config.mma, *mma_params, config.subset);
  }
  return select_channels(videos, config.subset);
}

TrainResult train_mma(const RunConfig& config, const FrameSplits& frames) {
  if (frames.train.empty() || frames.val.empty()) throw ValidationError("empty frame split");
  TensorMap params = mma::init_mma_params(config.mma, data::derive_seed(config.seed, 20));
  autodiff::AdamState state;
  const std::span<const data::FrameSample> train(frames.train);

  LoopHooks hooks;
  hooks.step = [&](const std::vector<std::size_t>& idx) {
    return mma::mma_train_step(gather(train, idx), config.mma, params, state, config.train.lr).total;
  };
  hooks.validate = [&] {
    const double loss = mma::loss_mma(frames.val, config.mma, params).total;
    return std::make_pair(loss, loss);
  };
  hooks.snapshot = [&] { return params; };
  hooks.higher_is_better = false;
  return run_loop(config, train.size(), hooks, model_spec(config), "val_loss_mma");
}

TrainResult train_videos(const RunConfig& config, const VideoSplits& videos, const Checkpoint* mma,
                         const Checkpoint* mrnn_init) {
  if (videos.train.size() < 2 || videos.val.size() < 2) {
    throw ValidationError("video train and val splits need at least two samples each");
  }
  const double lr = config.stage_lr();
  autodiff::AdamState state;
  TensorMap params = mrnn_init != nullptr
                         ? with_prefix(mrnn_init->params, "mrnn.")
                         : mrnn::init_mrnn_params(config.mrnn, data::derive_seed(config.seed, 21));
  mrnn::check_mrnn_params(config.mrnn, params);
  LoopHooks hooks;

  if (config.train.stage == Stage::kMrnnFrozen) {
    const TensorMap* frozen = mma_params_for(config, mma);
    const auto train = aggregator_inputs(config, videos.train, frozen);
    const auto val = aggregator_inputs(config, videos.val, frozen);
    const std::span<const data::VideoSample> train_span(train);
    hooks.step = [&](const std::vector<std::size_t>& idx) {
      return mrnn::mrnn_train_step(gather(train_span, idx), config.mrnn, params, state, lr, config.loss);
    };
    hooks.validate = [&] { return video_scores(mrnn::predict(val, config.mrnn, params), val, config.loss); };
    hooks.snapshot = [&] {
      TensorMap out = params;
      if (frozen != nullptr) out.merge(with_prefix(*frozen, "mma."));
      return out;
    };
    return run_loop(config, train.size(), hooks, model_spec(config), "val_mean_rho");
  }

  if (config.train.stage != Stage::kEndToEnd) throw ConfigError("stage mma trains on frames, not videos");
  if (!config.data.raw_features) throw ConfigError("end-to-end training needs raw-feature videos");
  if (mma != nullptr) {
    mma_params_for(config, mma);
    params.merge(with_prefix(mma->params, "mma."));
  } else {
    params.merge(mma::init_mma_params(config.mma, data::derive_seed(config.seed, 20)));
  }
  mma::check_mma_params(config.mma, params);
  const std::span<const data::VideoSample> train(videos.train);
  hooks.step = [&](const std::vector<std::size_t>& idx) {
    const auto batch = gather(train, idx);
    autodiff::Graph g;
    const auto net = build_end_to_end(g, batch, config.mma, config.mrnn, config.subset);
    const auto loss = mrnn::build_loss(g, net.output, mrnn::stack_labels(batch), config.loss);
    const double value = g.evaluate(loss, params).item();
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss at Adam step " + std::to_string(state.step));
    }
    autodiff::adam_update(params, g.backward(), state, lr);
    return value;
  };
  hooks.validate = [&] {
    return video_scores(predict_end_to_end(videos.val, config.mma, config.mrnn, config.subset, params),
                        videos.val, config.loss);
  };
  hooks.snapshot = [&] { return params; };
  return run_loop(config, train.size(), hooks, model_spec(config), "val_mean_rho");
}

TrainResult train_stage(const RunConfig& config) {
  if (config.train.stage == Stage::kMma) return train_mma(config, read_frames(config.paths.data));
  const VideoSplits videos = read_videos(config.paths.data);
  check_video_manifest(videos.manifest, config);
  std::optional<Checkpoint> mma, mrnn_init;
  if (!config.paths.mma_checkpoint.empty()) mma = load_checkpoint(config.paths.mma_checkpoint);
  if (config.train.stage == Stage::kEndToEnd && !config.paths.mrnn_checkpoint.empty()) {
    mrnn_init = load_checkpoint(config.paths.mrnn_checkpoint);
  }
  return train_videos(config, videos, mma ? &*mma : nullptr, mrnn_init ? &*mrnn_init : nullptr);
}

Tensor predict_videos(const Checkpoint& ckpt, const RunConfig& config,
                      std::span<const data::VideoSample> videos) {
  check_compatible(ckpt, config);
  switch (config.train.stage) {
    case Stage::kMrnnFrozen: {
      const auto inputs = aggregator_inputs(config, videos, config.data.raw_features ? &ckpt.params : nullptr);
      return mrnn::predict(inputs, config.mrnn, ckpt.params);
    }
    case Stage::kEndToEnd:
      return predict_end_to_end(videos, config.mma, config.mrnn, config.subset, ckpt.params);
    case Stage::kMma:
      break;
  }
  throw ConfigError("an mma checkpoint does not predict video intensities");
}

std::string curve_csv(const TrainResult& result) {
  std::ostringstream out;
  out << "schema_version," << kCurveSchemaVersion << "\n";
  out << "epoch,train_loss,val_loss," << result.metric_name << "\n";
  char buf[128];
  for (const auto& r : result.curve) {
    if (std::isnan(r.train_loss)) {
      std::snprintf(buf, sizeof buf, "%zu,,%.10g,%.10g\n", r.epoch, r.val_loss, r.val_metric);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", r.epoch, r.train_loss, r.val_loss,
                    r.val_metric);
    }
    out << buf;
  }
  return out.str();
}

std::string curve_svg(const TrainResult& result) {
  constexpr double kW = 640, kH = 360, kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const double last = std::max<double>(1.0, static_cast<double>(result.curve.back().epoch));

  auto polyline = [&](auto value, const char* colour) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : result.curve) {
      const double v = value(r);
      if (std::isnan(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi >= lo)) return std::string();
    if (hi == lo) hi = lo + 1.0;
    std::ostringstream pts;
    char buf[64];
    for (const auto& r : result.curve) {
      const double v = value(r);
      if (std::isnan(v)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", kLeft + pw * static_cast<double>(r.epoch) / last,
                    kTop + ph * (1.0 - (v - lo) / (hi - lo)));
      pts << buf;
    }
    std::snprintf(buf, sizeof buf, " [%.4g, %.4g]", lo, hi);
    return "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" +
           pts.str() + "\"/>\n<!--" + buf + "-->\n";
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<!-- schema_version " << kCurveSchemaVersion << " -->\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#888\"/>\n"
      << polyline([](const EpochRecord& r) { return r.train_loss; }, "#1f77b4")
      << polyline([](const EpochRecord& r) { return r.val_metric; }, "#d62728")
      << "<text x=\"" << kLeft << "\" y=\"20\" fill=\"#1f77b4\">train loss</text>\n"
      << "<text x=\"" << kLeft + 120 << "\" y=\"20\" fill=\"#d62728\">" << result.metric_name
      << "</text>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">epoch (0 to " << result.curve.back().epoch << ")</text>\n"
      << "</svg>\n";
  return svg.str();
}

}  // namespace feie::pipeline
