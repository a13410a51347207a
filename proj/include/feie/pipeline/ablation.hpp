#pragma once

#include <string>
#include <vector>

#include "feie/pipeline/checkpoint.hpp"
#include "feie/pipeline/config.hpp"
#include "feie/pipeline/datasets.hpp"

namespace feie::pipeline {

struct AblationRow {
  Subset subset;
  bool mask = true;
  mrnn::LossKind loss = mrnn::LossKind::kPearson;
  double val_mean_rho = 0.0;   // best validation epoch
  double test_mean_rho = 0.0;  // same checkpoint on the test split
};

/// Trains one aggregator per variant (representation subset × mask on/off ×
/// Pearson/MSE) on the frozen-stage inputs and scores each on the test split.
/// Variants run on `threads` workers; results do not depend on the count.
std::vector<AblationRow> run_ablation(const RunConfig& base, const VideoSplits& videos,
                                      const Checkpoint* mma, std::size_t threads);

/// Trains and scores a single variant.
AblationRow run_variant(const RunConfig& base, const VideoSplits& videos, const Checkpoint* mma,
                        const Subset& subset, bool mask, mrnn::LossKind loss);

/// Worker count from FEIE_THREADS, defaulting to 1.
std::size_t thread_count_from_env();

std::string ablation_csv(const std::vector<AblationRow>& rows);
/// Fixed-width table, one row per variant, mean ρ in %.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace feie::pipeline
