#include "feie/mma/losses.hpp"

#include <string>

#include "feie/error.hpp"
#include "feie/labels.hpp"

namespace feie::mma {

using autodiff::Axis;

Var build_ccc_loss(Graph& g, Var va_pred, const Tensor& va_label) {
  if (va_label.rows() < 2) throw ValidationError("CCC loss needs at least 2 labeled samples");
  const Var label = g.constant(va_label, "va_label");
  const Var cov = g.covariance(va_pred, label, Axis::kRows);
  const Var var_pred = g.variance(va_pred, Axis::kRows);
  const Var var_label = g.variance(label, Axis::kRows);
  const Var gap = g.mean(va_pred, Axis::kRows) - g.mean(label, Axis::kRows);
  const Var denom = var_pred + var_label + gap * gap;
  const Var ccc = g.label(g.div_or_zero(g.scale(cov, 2.0), denom), "ccc");
  return g.label(g.constant(1.0) - g.mean(ccc), "L_CCC");
}

Var build_cce_loss(Graph& g, Var expr_probs, std::span<const int> labels) {
  if (labels.empty()) throw ValidationError("CCE loss needs at least one labeled sample");
  Tensor onehot({labels.size(), kNumExpressions}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumExpressions)) {
      throw ValidationError("expression label out of range at row " + std::to_string(i));
    }
    onehot.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  const Var picked = g.mask(g.log(expr_probs), std::move(onehot));
  return g.label(g.scale(g.sum(picked), -1.0 / static_cast<double>(labels.size())), "L_CCE");
}

Var build_bce_loss(Graph& g, Var au_probs, const Tensor& labels) {
  Tensor complement = labels;
  for (double& v : complement.values()) v = 1.0 - v;
  const Var one = g.constant(1.0);
  const Var pos = g.mask(g.log(au_probs), labels);
  const Var neg = g.mask(g.log(one - au_probs), std::move(complement));
  const double n = static_cast<double>(labels.size());
  return g.label(g.scale(g.sum(pos + neg), -1.0 / n), "L_BCE");
}

Var build_pseudo_au(Graph& g, Var expr_probs, const RelatednessMatrix& m) {
  return g.label(g.matmul(expr_probs, g.constant(m.as_tensor(), "relatedness")), "pseudo_au");
}

Var build_dm_loss(Graph& g, Var au_probs, Var pseudo, DmForm form) {
  Var terms = pseudo * g.log(au_probs);
  if (form == DmForm::kFullBce) {
    const Var one = g.constant(1.0);
    terms = terms + (one - pseudo) * g.log(one - au_probs);
  }
  // Mean over samples of the per-sample sum over the action units.
  const auto width = static_cast<double>(kNumActionUnits);
  return g.label(g.scale(g.mean(terms), -width), "L_DM");
}

namespace {

double eval_scalar(Graph& g, Var root) { return g.evaluate(root, {}).item(); }

}  // namespace

double loss_ccc(const Tensor& va_pred, const Tensor& va_label) {
  if (va_pred.rows() != va_label.rows() || va_pred.cols() != 2 || va_label.cols() != 2) {
    throw ShapeError("loss_ccc: prediction shape " + va_pred.shape_string() +
                     " does not match label shape " + va_label.shape_string());
  }
  Graph g;
  return eval_scalar(g, build_ccc_loss(g, g.constant(va_pred), va_label));
}

double loss_cce(const Tensor& expr_probs, std::span<const int> labels) {
  if (expr_probs.rows() != labels.size()) throw ShapeError("loss_cce: row count mismatch");
  Graph g;
  return eval_scalar(g, build_cce_loss(g, g.constant(expr_probs), labels));
}

double loss_bce(const Tensor& au_probs, const Tensor& labels) {
  if (au_probs.size() != labels.size()) throw ShapeError("loss_bce: shape mismatch");
  Graph g;
  return eval_scalar(g, build_bce_loss(g, g.constant(au_probs), labels));
}

double loss_dm(const Tensor& au_probs, const Tensor& pseudo, DmForm form) {
  if (au_probs.size() != pseudo.size()) throw ShapeError("loss_dm: shape mismatch");
  Graph g;
  return eval_scalar(g, build_dm_loss(g, g.constant(au_probs), g.constant(pseudo), form));
}

}  // namespace feie::mma
