#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feie/autodiff/adam.hpp"
#include "feie/autodiff/graph.hpp"
#include "feie/data/samples.hpp"
#include "feie/labels.hpp"
#include "feie/tensor.hpp"

namespace feie::mrnn {

using autodiff::Graph;
using autodiff::Var;

/// Shape of the masked recurrent aggregator.
struct MrnnConfig {
  std::size_t steps = 32;       // t, padded sequence length
  std::size_t input_dim = 26;   // d, per-frame representation width
  std::size_t hidden = 16;      // d′, GRU units
  std::size_t ff_units = 8;     // d″, width of the layer reading the masked embedding
  std::size_t gru_layers = 1;
  bool mask = true;             // zero z′ past the true length before ff1
  bool sigmoid_output = false;  // squash u into [0, 1]

  std::size_t embedding_dim() const { return steps * hidden; }
  bool operator==(const MrnnConfig&) const = default;
};

enum class LossKind { kPearson, kMse };

std::string_view loss_name(LossKind kind);
LossKind parse_loss(std::string_view name);

/// Parameter name prefix of GRU layer `layer`.
std::string gru_prefix(std::size_t layer);

/// Names and shapes of every trainable array, all prefixed "mrnn.".
/// GRU layer k: W_{z,r,h} (d′ × d_in), U_{z,r,h} (d′ × d′), b_{z,r,h} (d′).
/// ff1.W is (d′·t) × d″ and out.W is d″ × 7.
std::vector<std::pair<std::string, Shape>> mrnn_param_shapes(const MrnnConfig& config);
TensorMap init_mrnn_params(const MrnnConfig& config, std::uint64_t seed);
void check_mrnn_params(const MrnnConfig& config, const TensorMap& params);

/// GRU recurrence over per-step inputs (each batch × d). Returns all hidden
/// states h_1..h_t (each batch × d′).
std::vector<Var> build_gru(Graph& g, std::span<const Var> inputs, std::string_view prefix,
                           Var h0);

/// B × (t·d′) matrix with ones at positions [0, l_b·d′) of row b.
Tensor routing_mask(std::span<const std::size_t> lengths, std::size_t steps, std::size_t hidden);

struct MrnnGraph {
  Var embedding;  // z′
  Var masked;     // z″
  Var features;   // z‴
  Var output;     // u
};

/// Full aggregator over per-step inputs. `lengths` holds the true length of
/// every batch row.
MrnnGraph build_mrnn(Graph& g, std::span<const Var> inputs, std::span<const std::size_t> lengths,
                     const MrnnConfig& config);

/// Per-step batch × d constants built from the frame matrices.
std::vector<Var> step_inputs(Graph& g, std::span<const data::VideoSample> batch);
Tensor stack_labels(std::span<const data::VideoSample> batch);

/// Hidden states of one GRU layer over a t × d sequence, stacked t × d′.
Tensor gru_forward(const Tensor& inputs, const TensorMap& params,
                   std::string_view prefix = "mrnn.gru0",
                   const std::optional<Tensor>& h0 = std::nullopt);

/// Keeps positions [0, l·d′) of z′ and zeroes the rest.
std::vector<double> mask_and_route(std::span<const double> embedding, std::size_t length,
                                   std::size_t hidden);

std::array<double, kNumIntensities> mrnn_forward(const data::VideoSample& sample,
                                                 const MrnnConfig& config,
                                                 const TensorMap& params);

/// Row i holds the prediction for dataset[i]. Evaluated in fixed-size chunks.
Tensor predict(std::span<const data::VideoSample> dataset, const MrnnConfig& config,
               const TensorMap& params);

// Losses.

struct PearsonLoss {
  double value = 0.0;
  /// Column had zero variance in predictions or labels; its ρ counted as 0.
  std::array<bool, kNumIntensities> degenerate{};
};

/// 1 − mean over columns of the batch Pearson correlation.
Var build_pearson_loss(Graph& g, Var preds, const Tensor& labels);
Var build_mse_loss(Graph& g, Var preds, const Tensor& labels);
Var build_loss(Graph& g, Var preds, const Tensor& labels, LossKind kind);

PearsonLoss loss_pearson(const Tensor& preds, const Tensor& labels);
double loss_mse(const Tensor& preds, const Tensor& labels);

struct StepResult {
  double loss = 0.0;
  autodiff::Gradients gradients;
};

/// Loss and gradients for one batch without updating anything.
StepResult mrnn_loss_and_gradients(std::span<const data::VideoSample> batch,
                                   const MrnnConfig& config, const TensorMap& params,
                                   LossKind kind);

/// One Adam step on the selected loss; returns the pre-update loss.
double mrnn_train_step(std::span<const data::VideoSample> batch, const MrnnConfig& config,
                       TensorMap& params, autodiff::AdamState& state, double lr, LossKind kind);

}  // namespace feie::mrnn
