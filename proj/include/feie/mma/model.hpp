#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "feie/autodiff/adam.hpp"
#include "feie/autodiff/graph.hpp"
#include "feie/data/samples.hpp"
#include "feie/labels.hpp"
#include "feie/mma/losses.hpp"
#include "feie/tensor.hpp"

namespace feie::mma {

/// Shape of the multi-task extractor: a fully connected residual trunk ending
/// in a shared embedding, read by three task heads.
struct MmaConfig {
  std::size_t input_dim = 64;
  std::size_t width = 64;
  std::size_t blocks = 2;
  DmForm dm_form = DmForm::kPrinted;

  bool operator==(const MmaConfig&) const = default;
};

/// Per-frame affect representation.
struct AffectVector {
  std::array<double, 2> va{};
  std::array<double, kNumExpressions> expr{};
  std::array<double, kNumActionUnits> au{};

  /// [va, expr, au] as one 26-vector.
  std::vector<double> flat() const;
};

/// Names and shapes of every trainable array, all prefixed "mma.".
std::vector<std::pair<std::string, Shape>> mma_param_shapes(const MmaConfig& config);
/// Uniform Glorot initialisation, zero biases.
TensorMap init_mma_params(const MmaConfig& config, std::uint64_t seed);
/// Throws ShapeError when a parameter is missing or mis-shaped.
void check_mma_params(const MmaConfig& config, const TensorMap& params);

struct MmaHeads {
  Var embedding;
  Var va;    // tanh
  Var expr;  // softmax
  Var au;    // sigmoid
};

/// Builds trunk and heads over a batch of frame descriptors (rows).
MmaHeads build_mma(Graph& g, Var features, const MmaConfig& config);
/// Concatenated [va, expr, au] per row.
Var build_affect(Graph& g, const MmaHeads& heads);

AffectVector mma_forward(std::span<const double> features, const MmaConfig& config,
                         const TensorMap& params);
/// Batch form: rows of `features` → rows of the 26-dim representation.
Tensor mma_forward_batch(const Tensor& features, const MmaConfig& config, const TensorMap& params);

struct LossTerm {
  double value = 0.0;
  /// False when no sample in the batch carried the label the term needs.
  bool present = false;
};

struct MmaLoss {
  double total = 0.0;
  LossTerm ccc, cce, bce, dm;
};

/// Root of the multi-task objective plus handles to its terms.
struct MmaLossGraph {
  Var total;
  Var ccc, cce, bce, dm;
  bool has_ccc = false, has_cce = false, has_bce = false;
};

/// L_CCC + L_CCE + L_BCE + L_DM over a batch. Supervised terms only see the
/// rows carrying their label; L_CCC is skipped below two labeled rows. L_DM
/// compares every row's AU probabilities with the pseudo-AUs of its own
/// predicted expression distribution.
MmaLossGraph build_mma_loss(Graph& g, const MmaHeads& heads,
                            std::span<const data::FrameSample> batch, const MmaConfig& config);

Tensor stack_features(std::span<const data::FrameSample> batch);

MmaLoss loss_mma(std::span<const data::FrameSample> batch, const MmaConfig& config,
                 const TensorMap& params);

/// One Adam step on ∇L_MMA. Throws NumericError on a non-finite loss; the
/// returned loss is the pre-update value.
MmaLoss mma_train_step(std::span<const data::FrameSample> batch, const MmaConfig& config,
                       TensorMap& params, autodiff::AdamState& state, double lr);

}  // namespace feie::mma
