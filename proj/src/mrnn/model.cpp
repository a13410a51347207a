#include "feie/mrnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "feie/error.hpp"
#include "feie/init.hpp"

namespace feie::mrnn {

using autodiff::Axis;

std::string_view loss_name(LossKind kind) {
  return kind == LossKind::kPearson ? "pearson" : "mse";
}

LossKind parse_loss(std::string_view name) {
  if (name == "pearson") return LossKind::kPearson;
  if (name == "mse") return LossKind::kMse;
  throw ValidationError("unknown loss '" + std::string(name) + "' (expected pearson or mse)");
}

std::string gru_prefix(std::size_t layer) { return "mrnn.gru" + std::to_string(layer); }

std::vector<std::pair<std::string, Shape>> mrnn_param_shapes(const MrnnConfig& c) {
  std::vector<std::pair<std::string, Shape>> shapes;
  for (std::size_t layer = 0; layer < c.gru_layers; ++layer) {
    const std::string p = gru_prefix(layer);
    const std::size_t in = layer == 0 ? c.input_dim : c.hidden;
    for (const char* gate : {"z", "r", "h"}) {
      shapes.push_back({p + ".W_" + gate, {c.hidden, in}});
      shapes.push_back({p + ".U_" + gate, {c.hidden, c.hidden}});
      shapes.push_back({p + ".b_" + gate, {c.hidden}});
    }
  }
  shapes.push_back({"mrnn.ff1.W", {c.embedding_dim(), c.ff_units}});
  shapes.push_back({"mrnn.ff1.b", {c.ff_units}});
  shapes.push_back({"mrnn.out.W", {c.ff_units, kNumIntensities}});
  shapes.push_back({"mrnn.out.b", {kNumIntensities}});
  return shapes;
}

TensorMap init_mrnn_params(const MrnnConfig& config, std::uint64_t seed) {
  if (config.steps == 0 || config.input_dim == 0 || config.hidden == 0 || config.ff_units == 0 ||
      config.gru_layers == 0) {
    throw ConfigError("MRNN dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  TensorMap params;
  for (const auto& [name, shape] : mrnn_param_shapes(config)) {
    if (shape.size() == 1) {
      params.emplace(name, Tensor(shape, 0.0));
    } else {
      // Stored as rows × cols; fan-in is the side the input multiplies into.
      const bool gru = name.find(".gru") != std::string::npos;
      const std::size_t fan_in = gru ? shape[1] : shape[0];
      const std::size_t fan_out = gru ? shape[0] : shape[1];
      params.emplace(name, glorot_uniform(shape, fan_in, fan_out, rng));
    }
  }
  return params;
}

void check_mrnn_params(const MrnnConfig& config, const TensorMap& params) {
  for (const auto& [name, shape] : mrnn_param_shapes(config)) {
    auto it = params.find(name);
    if (it == params.end()) throw ShapeError("missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw ShapeError("parameter '" + name + "' has shape " + it->second.shape_string() +
                       ", expected " + shape_string(shape));
    }
  }
}

std::vector<Var> build_gru(Graph& g, std::span<const Var> inputs, std::string_view prefix,
                           Var h0) {
  const std::string p(prefix);
  const Var Wz = g.parameter(p + ".W_z"), Wr = g.parameter(p + ".W_r"), Wh = g.parameter(p + ".W_h");
  const Var Uz = g.parameter(p + ".U_z"), Ur = g.parameter(p + ".U_r"), Uh = g.parameter(p + ".U_h");
  const Var bz = g.parameter(p + ".b_z"), br = g.parameter(p + ".b_r"), bh = g.parameter(p + ".b_h");
  const Var one = g.constant(1.0);

  std::vector<Var> states;
  states.reserve(inputs.size());
  Var h = h0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Var x = inputs[k];
    const Var update = g.sigmoid(g.matmul(x, Wz, true) + g.matmul(h, Uz, true) + bz);
    const Var reset = g.sigmoid(g.matmul(x, Wr, true) + g.matmul(h, Ur, true) + br);
    const Var candidate = g.tanh(g.matmul(x, Wh, true) + g.matmul(reset * h, Uh, true) + bh);
    h = (one - update) * h + update * candidate;
    g.label(h, p + ".h" + std::to_string(k));
    states.push_back(h);
  }
  return states;
}

Tensor routing_mask(std::span<const std::size_t> lengths, std::size_t steps, std::size_t hidden) {
  Tensor m({lengths.size(), steps * hidden}, 0.0);
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    if (lengths[b] < 1 || lengths[b] > steps) {
      throw ValidationError("true length " + std::to_string(lengths[b]) + " outside [1, " +
                            std::to_string(steps) + "]");
    }
    std::fill_n(m.values().begin() + static_cast<std::ptrdiff_t>(b * steps * hidden),
                lengths[b] * hidden, 1.0);
  }
  return m;
}

MrnnGraph build_mrnn(Graph& g, std::span<const Var> inputs, std::span<const std::size_t> lengths,
                     const MrnnConfig& config) {
  if (inputs.size() != config.steps) {
    throw ShapeError("MRNN expects " + std::to_string(config.steps) + " steps, got " +
                     std::to_string(inputs.size()));
  }
  const Var h0 = g.constant(Tensor({lengths.size(), config.hidden}, 0.0), "h0");
  std::vector<Var> layer_in(inputs.begin(), inputs.end());
  std::vector<Var> states;
  for (std::size_t layer = 0; layer < config.gru_layers; ++layer) {
    states = build_gru(g, layer_in, gru_prefix(layer), h0);
    layer_in = states;
  }

  MrnnGraph out;
  out.embedding = g.label(g.concat(states), "z'");
  out.masked = config.mask
                   ? g.label(g.mask(out.embedding,
                                    routing_mask(lengths, config.steps, config.hidden)),
                             "z''")
                   : out.embedding;
  out.features = g.label(
      g.tanh(g.matmul(out.masked, g.parameter("mrnn.ff1.W")) + g.parameter("mrnn.ff1.b")),
      "z'''");
  Var u = g.matmul(out.features, g.parameter("mrnn.out.W")) + g.parameter("mrnn.out.b");
  if (config.sigmoid_output) u = g.sigmoid(u);
  out.output = g.label(u, "u");
  return out;
}

std::vector<Var> step_inputs(Graph& g, std::span<const data::VideoSample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const std::size_t t = batch.front().steps(), d = batch.front().dim();
  for (const auto& s : batch) {
    if (s.steps() != t || s.dim() != d) {
      throw ShapeError("sample '" + s.id + "' has frames " + s.frames.shape_string() +
                       ", batch expects [" + std::to_string(t) + "x" + std::to_string(d) + "]");
    }
  }
  std::vector<Var> steps;
  steps.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    Tensor x({batch.size(), d});
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::copy_n(batch[b].frames.values().begin() + static_cast<std::ptrdiff_t>(k * d), d,
                  x.values().begin() + static_cast<std::ptrdiff_t>(b * d));
    }
    steps.push_back(g.constant(std::move(x)));
  }
  return steps;
}

Tensor stack_labels(std::span<const data::VideoSample> batch) {
  Tensor y({batch.size(), kNumIntensities});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::copy(batch[b].label.begin(), batch[b].label.end(),
              y.values().begin() + static_cast<std::ptrdiff_t>(b * kNumIntensities));
  }
  return y;
}

namespace {

std::vector<std::size_t> lengths_of(std::span<const data::VideoSample> batch) {
  std::vector<std::size_t> lengths;
  lengths.reserve(batch.size());
  for (const auto& s : batch) lengths.push_back(s.length);
  return lengths;
}

void check_batch(std::span<const data::VideoSample> batch, const MrnnConfig& config) {
  for (const auto& s : batch) {
    if (s.steps() != config.steps || s.dim() != config.input_dim) {
      throw ShapeError("sample '" + s.id + "' has frames " + s.frames.shape_string() +
                       ", model expects [" + std::to_string(config.steps) + "x" +
                       std::to_string(config.input_dim) + "]");
    }
  }
}

}  // namespace

Tensor gru_forward(const Tensor& inputs, const TensorMap& params, std::string_view prefix,
                   const std::optional<Tensor>& h0) {
  const std::string p(prefix);
  auto it = params.find(p + ".U_z");
  if (it == params.end()) throw ShapeError("missing parameter '" + p + ".U_z'");
  const std::size_t hidden = it->second.rows();
  Graph g;
  std::vector<Var> steps;
  for (std::size_t k = 0; k < inputs.rows(); ++k) {
    steps.push_back(g.constant(Tensor({1, inputs.cols()}, inputs.row(k))));
  }
  Tensor start({1, hidden}, 0.0);
  if (h0) {
    if (h0->size() != hidden) throw ShapeError("h0 must have " + std::to_string(hidden) + " values");
    start = Tensor({1, hidden}, h0->data());
  }
  const auto states = build_gru(g, steps, prefix, g.constant(start, "h0"));
  const Var stacked = g.concat(states);
  const Tensor& flat = g.evaluate(stacked, params);
  return Tensor({inputs.rows(), hidden}, flat.data());
}

std::vector<double> mask_and_route(std::span<const double> embedding, std::size_t length,
                                   std::size_t hidden) {
  if (hidden == 0 || embedding.size() % hidden != 0) {
    throw ShapeError("embedding of " + std::to_string(embedding.size()) +
                     " values is not a whole number of " + std::to_string(hidden) + "-wide steps");
  }
  const std::size_t steps = embedding.size() / hidden;
  if (length < 1 || length > steps) {
    throw ValidationError("true length " + std::to_string(length) + " outside [1, " +
                          std::to_string(steps) + "]");
  }
  std::vector<double> out(embedding.size(), 0.0);
  std::copy_n(embedding.begin(), length * hidden, out.begin());
  return out;
}

std::array<double, kNumIntensities> mrnn_forward(const data::VideoSample& sample,
                                                 const MrnnConfig& config,
                                                 const TensorMap& params) {
  const Tensor u = predict(std::span(&sample, 1), config, params);
  std::array<double, kNumIntensities> out{};
  std::copy_n(u.values().begin(), kNumIntensities, out.begin());
  return out;
}

Tensor predict(std::span<const data::VideoSample> dataset, const MrnnConfig& config,
               const TensorMap& params) {
  check_mrnn_params(config, params);
  check_batch(dataset, config);
  constexpr std::size_t kChunk = 64;
  Tensor out({dataset.size(), kNumIntensities});
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    const auto chunk = dataset.subspan(start, std::min(kChunk, dataset.size() - start));
    Graph g;
    const auto steps = step_inputs(g, chunk);
    const auto lengths = lengths_of(chunk);
    const MrnnGraph net = build_mrnn(g, steps, lengths, config);
    const Tensor& u = g.evaluate(net.output, params);
    std::copy(u.values().begin(), u.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(start * kNumIntensities));
  }
  return out;
}

Var build_pearson_loss(Graph& g, Var preds, const Tensor& labels) {
  if (labels.rows() < 2) throw ValidationError("Pearson loss needs a batch of at least 2");
  const Var y = g.constant(labels, "labels");
  const Var cov = g.covariance(preds, y, Axis::kRows);
  const Var spread = g.sqrt(g.variance(preds, Axis::kRows) * g.variance(y, Axis::kRows));
  const Var rho = g.label(g.div_or_zero(cov, spread), "rho");
  return g.label(g.constant(1.0) - g.mean(rho), "L_total");
}

Var build_mse_loss(Graph& g, Var preds, const Tensor& labels) {
  const Var diff = preds - g.constant(labels, "labels");
  return g.label(g.mean(diff * diff), "L_MSE");
}

Var build_loss(Graph& g, Var preds, const Tensor& labels, LossKind kind) {
  return kind == LossKind::kPearson ? build_pearson_loss(g, preds, labels)
                                    : build_mse_loss(g, preds, labels);
}

PearsonLoss loss_pearson(const Tensor& preds, const Tensor& labels) {
  if (preds.rows() != labels.rows() || preds.cols() != labels.cols()) {
    throw ShapeError("loss_pearson: predictions " + preds.shape_string() + " vs labels " +
                     labels.shape_string());
  }
  Graph g;
  const Var p = g.constant(preds);
  const Var root = build_pearson_loss(g, p, labels);
  PearsonLoss out;
  out.value = g.evaluate(root, {}).item();
  auto column_variance = [](const Tensor& t, std::size_t c) {
    double m = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) m += t.at(r, c);
    m /= static_cast<double>(t.rows());
    double v = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) v += (t.at(r, c) - m) * (t.at(r, c) - m);
    return v;
  };
  for (std::size_t c = 0; c < std::min(labels.cols(), kNumIntensities); ++c) {
    out.degenerate[c] = column_variance(preds, c) == 0.0 || column_variance(labels, c) == 0.0;
  }
  return out;
}

double loss_mse(const Tensor& preds, const Tensor& labels) {
  if (preds.rows() != labels.rows() || preds.cols() != labels.cols()) {
    throw ShapeError("loss_mse: predictions " + preds.shape_string() + " vs labels " +
                     labels.shape_string());
  }
  Graph g;
  return g.evaluate(build_mse_loss(g, g.constant(preds), labels), {}).item();
}

StepResult mrnn_loss_and_gradients(std::span<const data::VideoSample> batch,
                                   const MrnnConfig& config, const TensorMap& params,
                                   LossKind kind) {
  check_mrnn_params(config, params);
  check_batch(batch, config);
  Graph g;
  const auto steps = step_inputs(g, batch);
  const auto lengths = lengths_of(batch);
  const MrnnGraph net = build_mrnn(g, steps, lengths, config);
  const Var loss = build_loss(g, net.output, stack_labels(batch), kind);
  StepResult result;
  result.loss = g.evaluate(loss, params).item();
  result.gradients = g.backward();
  return result;
}

double mrnn_train_step(std::span<const data::VideoSample> batch, const MrnnConfig& config,
                       TensorMap& params, autodiff::AdamState& state, double lr, LossKind kind) {
  if (!(lr >= 0.0)) throw ValidationError("learning rate must be non-negative");
  StepResult r = mrnn_loss_and_gradients(batch, config, params, kind);
  if (!std::isfinite(r.loss)) {
    throw NumericError("non-finite loss at Adam step " + std::to_string(state.step));
  }
  autodiff::adam_update(params, r.gradients, state, lr);
  return r.loss;
}

}  // namespace feie::mrnn
