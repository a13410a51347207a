#pragma once

#include <span>

#include "feie/autodiff/graph.hpp"
#include "feie/mma/relatedness.hpp"
#include "feie/tensor.hpp"

namespace feie::mma {

using autodiff::Graph;
using autodiff::Var;

/// Form of the distribution-matching loss. kPrinted keeps only the
/// −r′·log r term; kFullBce adds −(1 − r′)·log(1 − r).
enum class DmForm { kPrinted, kFullBce };

// Graph builders. Predictions are graph values, labels are fixed arrays.

/// 1 − mean over the two columns of CCC(pred, label), computed across rows.
Var build_ccc_loss(Graph& g, Var va_pred, const Tensor& va_label);
/// Mean over rows of −log p[label].
Var build_cce_loss(Graph& g, Var expr_probs, std::span<const int> labels);
/// Mean over rows and columns of −[y log p + (1 − y) log(1 − p)].
Var build_bce_loss(Graph& g, Var au_probs, const Tensor& labels);
/// Row-wise exprᵀ M.
Var build_pseudo_au(Graph& g, Var expr_probs, const RelatednessMatrix& m);
/// Mean over rows of Σᵢ −r′ᵢ log rᵢ (plus the complement term for kFullBce).
Var build_dm_loss(Graph& g, Var au_probs, Var pseudo, DmForm form = DmForm::kPrinted);

// Direct evaluation on fixed arrays (one row per sample).

/// Requires at least two rows.
double loss_ccc(const Tensor& va_pred, const Tensor& va_label);
double loss_cce(const Tensor& expr_probs, std::span<const int> labels);
double loss_bce(const Tensor& au_probs, const Tensor& labels);
double loss_dm(const Tensor& au_probs, const Tensor& pseudo, DmForm form = DmForm::kPrinted);

}  // namespace feie::mma
