#include "feie/mma/model.hpp"

#include <cmath>
#include <random>

#include "feie/error.hpp"
#include "feie/init.hpp"

namespace feie::mma {

std::vector<double> AffectVector::flat() const {
  std::vector<double> out;
  out.reserve(kAffectDim);
  out.insert(out.end(), va.begin(), va.end());
  out.insert(out.end(), expr.begin(), expr.end());
  out.insert(out.end(), au.begin(), au.end());
  return out;
}

std::vector<std::pair<std::string, Shape>> mma_param_shapes(const MmaConfig& c) {
  std::vector<std::pair<std::string, Shape>> shapes;
  shapes.push_back({"mma.in.W", {c.input_dim, c.width}});
  shapes.push_back({"mma.in.b", {c.width}});
  for (std::size_t k = 0; k < c.blocks; ++k) {
    const std::string p = "mma.block" + std::to_string(k);
    shapes.push_back({p + ".W", {c.width, c.width}});
    shapes.push_back({p + ".b", {c.width}});
  }
  shapes.push_back({"mma.va.W", {c.width, 2}});
  shapes.push_back({"mma.va.b", {2}});
  shapes.push_back({"mma.expr.W", {c.width, kNumExpressions}});
  shapes.push_back({"mma.expr.b", {kNumExpressions}});
  shapes.push_back({"mma.au.W", {c.width, kNumActionUnits}});
  shapes.push_back({"mma.au.b", {kNumActionUnits}});
  return shapes;
}

TensorMap init_mma_params(const MmaConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TensorMap params;
  for (const auto& [name, shape] : mma_param_shapes(config)) {
    if (shape.size() == 1) {
      params.emplace(name, Tensor(shape, 0.0));
    } else {
      params.emplace(name, glorot_uniform(shape, shape[0], shape[1], rng));
    }
  }
  return params;
}

void check_mma_params(const MmaConfig& config, const TensorMap& params) {
  for (const auto& [name, shape] : mma_param_shapes(config)) {
    auto it = params.find(name);
    if (it == params.end()) throw ShapeError("missing parameter '" + name + "'");
    if (it->second.shape() != shape) {
      throw ShapeError("parameter '" + name + "' has shape " + it->second.shape_string() +
                       ", expected " + shape_string(shape));
    }
  }
}

MmaHeads build_mma(Graph& g, Var features, const MmaConfig& config) {
  auto dense = [&](Var x, const std::string& prefix) {
    return g.matmul(x, g.parameter(prefix + ".W")) + g.parameter(prefix + ".b");
  };
  Var h = g.label(g.tanh(dense(features, "mma.in")), "trunk.in");
  for (std::size_t k = 0; k < config.blocks; ++k) {
    const std::string p = "mma.block" + std::to_string(k);
    h = g.label(h + g.tanh(dense(h, p)), p);
  }
  MmaHeads heads;
  heads.embedding = h;
  heads.va = g.label(g.tanh(dense(h, "mma.va")), "head.va");
  heads.expr = g.label(g.softmax(dense(h, "mma.expr")), "head.expr");
  heads.au = g.label(g.sigmoid(dense(h, "mma.au")), "head.au");
  return heads;
}

Var build_affect(Graph& g, const MmaHeads& heads) {
  return g.concat({heads.va, heads.expr, heads.au});
}

Tensor mma_forward_batch(const Tensor& features, const MmaConfig& config, const TensorMap& params) {
  check_mma_params(config, params);
  if (features.cols() != config.input_dim) {
    throw ShapeError("MMA expects " + std::to_string(config.input_dim) +
                     "-dim features, got " + features.shape_string());
  }
  Graph g;
  const MmaHeads heads = build_mma(g, g.constant(features, "features"), config);
  return g.evaluate(build_affect(g, heads), params);
}

AffectVector mma_forward(std::span<const double> features, const MmaConfig& config,
                         const TensorMap& params) {
  const Tensor out = mma_forward_batch(
      Tensor({1, features.size()}, std::vector<double>(features.begin(), features.end())), config,
      params);
  AffectVector a;
  for (std::size_t i = 0; i < 2; ++i) a.va[i] = out[i];
  for (std::size_t i = 0; i < kNumExpressions; ++i) a.expr[i] = out[2 + i];
  for (std::size_t i = 0; i < kNumActionUnits; ++i) a.au[i] = out[2 + kNumExpressions + i];
  return a;
}

Tensor stack_features(std::span<const data::FrameSample> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const std::size_t d = batch.front().features.size();
  Tensor x({batch.size(), d});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.size() != d) {
      throw ShapeError("sample '" + batch[i].id + "' has " +
                       std::to_string(batch[i].features.size()) + " features, expected " +
                       std::to_string(d));
    }
    std::copy(batch[i].features.begin(), batch[i].features.end(), x.values().begin() + i * d);
  }
  return x;
}

MmaLossGraph build_mma_loss(Graph& g, const MmaHeads& heads,
                            std::span<const data::FrameSample> batch, const MmaConfig& config) {
  std::vector<std::size_t> va_rows, expr_rows, au_rows;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].va) va_rows.push_back(i);
    if (batch[i].expr) expr_rows.push_back(i);
    if (batch[i].au) au_rows.push_back(i);
  }

  MmaLossGraph out;
  std::vector<Var> terms;
  if (va_rows.size() >= 2) {
    Tensor labels({va_rows.size(), 2});
    for (std::size_t k = 0; k < va_rows.size(); ++k) {
      labels.at(k, 0) = (*batch[va_rows[k]].va)[0];
      labels.at(k, 1) = (*batch[va_rows[k]].va)[1];
    }
    out.ccc = build_ccc_loss(g, g.select_rows(heads.va, va_rows), labels);
    out.has_ccc = true;
    terms.push_back(out.ccc);
  }
  if (!expr_rows.empty()) {
    std::vector<int> labels;
    for (std::size_t r : expr_rows) labels.push_back(*batch[r].expr);
    out.cce = build_cce_loss(g, g.select_rows(heads.expr, expr_rows), labels);
    out.has_cce = true;
    terms.push_back(out.cce);
  }
  if (!au_rows.empty()) {
    Tensor labels({au_rows.size(), kNumActionUnits});
    for (std::size_t k = 0; k < au_rows.size(); ++k) {
      for (std::size_t a = 0; a < kNumActionUnits; ++a) {
        labels.at(k, a) = (*batch[au_rows[k]].au)[a];
      }
    }
    out.bce = build_bce_loss(g, g.select_rows(heads.au, au_rows), labels);
    out.has_bce = true;
    terms.push_back(out.bce);
  }
  static const RelatednessMatrix kRelatedness = build_relatedness();
  out.dm = build_dm_loss(g, heads.au, build_pseudo_au(g, heads.expr, kRelatedness),
                         config.dm_form);
  terms.push_back(out.dm);

  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  out.total = g.label(total, "L_MMA");
  return out;
}

namespace {

MmaLoss collect(const Graph& g, const MmaLossGraph& lg) {
  MmaLoss loss;
  loss.total = g.value(lg.total).item();
  if (lg.has_ccc) loss.ccc = {g.value(lg.ccc).item(), true};
  if (lg.has_cce) loss.cce = {g.value(lg.cce).item(), true};
  if (lg.has_bce) loss.bce = {g.value(lg.bce).item(), true};
  loss.dm = {g.value(lg.dm).item(), true};
  return loss;
}

}  // namespace

MmaLoss loss_mma(std::span<const data::FrameSample> batch, const MmaConfig& config,
                 const TensorMap& params) {
  check_mma_params(config, params);
  Graph g;
  const MmaHeads heads = build_mma(g, g.constant(stack_features(batch), "features"), config);
  const MmaLossGraph lg = build_mma_loss(g, heads, batch, config);
  g.evaluate(lg.total, params);
  return collect(g, lg);
}

MmaLoss mma_train_step(std::span<const data::FrameSample> batch, const MmaConfig& config,
                       TensorMap& params, autodiff::AdamState& state, double lr) {
  if (!(lr >= 0.0)) throw ValidationError("learning rate must be non-negative");
  check_mma_params(config, params);
  Graph g;
  const MmaHeads heads = build_mma(g, g.constant(stack_features(batch), "features"), config);
  const MmaLossGraph lg = build_mma_loss(g, heads, batch, config);
  g.evaluate(lg.total, params);
  const MmaLoss loss = collect(g, lg);
  if (!std::isfinite(loss.total)) {
    throw NumericError("non-finite L_MMA at Adam step " + std::to_string(state.step));
  }
  autodiff::adam_update(params, g.backward(), state, lr);
  return loss;
}

}  // namespace feie::mma
