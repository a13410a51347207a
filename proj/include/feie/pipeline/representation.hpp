#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feie/autodiff/graph.hpp"
#include "feie/data/samples.hpp"
#include "feie/mma/model.hpp"
#include "feie/mrnn/model.hpp"

namespace feie::pipeline {

/// Which affect channels the aggregator reads.
struct Subset {
  bool va = true;
  bool expr = true;
  bool au = true;

  std::size_t width() const;
  /// Columns of the 26-dim affect vector, ascending.
  std::vector<std::size_t> columns() const;
  bool operator==(const Subset&) const = default;
};

std::string subset_name(const Subset& s);
/// "va", "expr", "au", "va+expr", "va+au", "expr+au" or "all".
Subset parse_subset(std::string_view name);
/// The seven subsets in ablation-table order.
std::array<Subset, 7> all_subsets();

/// Keeps only the chosen channel columns of every frame.
data::VideoSample select_channels(const data::VideoSample& video, const Subset& subset);
std::vector<data::VideoSample> select_channels(std::span<const data::VideoSample> videos,
                                               const Subset& subset);

/// Runs a frozen MMA over the true frames of each video and zero-pads the
/// resulting affect sequence; the output carries the chosen channels only.
std::vector<data::VideoSample> extract_affect(std::span<const data::VideoSample> videos,
                                              const mma::MmaConfig& mma_config,
                                              const TensorMap& mma_params, const Subset& subset);

/// MMA and MRNN in one graph: every frame goes through the shared MMA, the
/// chosen heads are concatenated, rows past each video's length are zeroed,
/// and the sequence feeds the aggregator. Matches extract_affect followed by
/// the MRNN forward pass.
mrnn::MrnnGraph build_end_to_end(autodiff::Graph& g, std::span<const data::VideoSample> batch,
                                 const mma::MmaConfig& mma_config,
                                 const mrnn::MrnnConfig& mrnn_config, const Subset& subset);

/// Predictions of the joint model, evaluated in fixed-size chunks.
Tensor predict_end_to_end(std::span<const data::VideoSample> videos,
                          const mma::MmaConfig& mma_config, const mrnn::MrnnConfig& mrnn_config,
                          const Subset& subset, const TensorMap& params);

}  // namespace feie::pipeline
