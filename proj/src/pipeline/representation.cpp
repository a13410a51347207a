#include "feie/pipeline/representation.hpp"

#include <algorithm>

#include "feie/error.hpp"

namespace feie::pipeline {

using autodiff::Graph;
using autodiff::Var;

std::size_t Subset::width() const {
  return (va ? 2 : 0) + (expr ? kNumExpressions : 0) + (au ? kNumActionUnits : 0);
}

std::vector<std::size_t> Subset::columns() const {
  std::vector<std::size_t> cols;
  auto add = [&](std::size_t begin, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) cols.push_back(begin + i);
  };
  if (va) add(0, 2);
  if (expr) add(2, kNumExpressions);
  if (au) add(2 + kNumExpressions, kNumActionUnits);
  return cols;
}

std::string subset_name(const Subset& s) {
  if (s.va && s.expr && s.au) return "all";
  std::string name;
  auto add = [&](bool on, const char* part) {
    if (!on) return;
    if (!name.empty()) name += "+";
    name += part;
  };
  add(s.va, "va");
  add(s.expr, "expr");
  add(s.au, "au");
  return name;
}

Subset parse_subset(std::string_view name) {
  for (const Subset& s : all_subsets()) {
    if (subset_name(s) == name) return s;
  }
  throw ConfigError("unknown representation subset '" + std::string(name) +
                    "' (expected va, expr, au, va+expr, va+au, expr+au or all)");
}

std::array<Subset, 7> all_subsets() {
  return {{{true, false, false},
           {false, true, false},
           {false, false, true},
           {true, true, false},
           {true, false, true},
           {false, true, true},
           {true, true, true}}};
}

data::VideoSample select_channels(const data::VideoSample& video, const Subset& subset) {
  if (video.dim() != kAffectDim) {
    throw ShapeError("sample '" + video.id + "' has " + std::to_string(video.dim()) +
                     "-dim frames; channel selection needs the 26-dim affect representation");
  }
  const auto cols = subset.columns();
  if (cols.empty()) throw ConfigError("representation subset selects no channel");
  data::VideoSample out = video;
  out.frames = Tensor({video.steps(), cols.size()});
  for (std::size_t r = 0; r < video.steps(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out.frames.at(r, c) = video.frames.at(r, cols[c]);
  }
  return out;
}

std::vector<data::VideoSample> select_channels(std::span<const data::VideoSample> videos,
                                               const Subset& subset) {
  std::vector<data::VideoSample> out;
  out.reserve(videos.size());
  for (const auto& v : videos) out.push_back(select_channels(v, subset));
  return out;
}

std::vector<data::VideoSample> extract_affect(std::span<const data::VideoSample> videos,
                                              const mma::MmaConfig& mma_config,
                                              const TensorMap& mma_params, const Subset& subset) {
  const auto cols = subset.columns();
  std::vector<data::VideoSample> out;
  out.reserve(videos.size());
  for (const auto& v : videos) {
    if (v.dim() != mma_config.input_dim) {
      throw ShapeError("sample '" + v.id + "' has " + std::to_string(v.dim()) +
                       "-dim frames, MMA expects " + std::to_string(mma_config.input_dim));
    }
    Tensor live({v.length, v.dim()});
    std::copy_n(v.frames.values().begin(), v.length * v.dim(), live.values().begin());
    const Tensor affect = mma::mma_forward_batch(live, mma_config, mma_params);

    data::VideoSample s;
    s.id = v.id;
    s.length = v.length;
    s.label = v.label;
    s.padding = data::Padding::kZero;
    s.frames = Tensor({v.steps(), cols.size()}, 0.0);
    for (std::size_t r = 0; r < v.length; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) s.frames.at(r, c) = affect.at(r, cols[c]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

mrnn::MrnnGraph build_end_to_end(Graph& g, std::span<const data::VideoSample> batch,
                                 const mma::MmaConfig& mma_config,
                                 const mrnn::MrnnConfig& mrnn_config, const Subset& subset) {
  if (batch.empty()) throw ValidationError("empty batch");
  const std::size_t t = mrnn_config.steps;
  const std::size_t d = mma_config.input_dim;
  const std::size_t w = subset.width();
  if (w == 0) throw ConfigError("representation subset selects no channel");
  if (mrnn_config.input_dim != w) {
    throw ShapeError("aggregator expects " + std::to_string(mrnn_config.input_dim) +
                     "-dim inputs but the subset '" + subset_name(subset) + "' has width " +
                     std::to_string(w));
  }
  std::vector<std::size_t> lengths;
  for (const auto& v : batch) {
    if (v.steps() != t || v.dim() != d) {
      throw ShapeError("sample '" + v.id + "' has frames " + v.frames.shape_string() +
                       ", joint model expects [" + std::to_string(t) + "x" + std::to_string(d) + "]");
    }
    lengths.push_back(v.length);
  }

  const std::size_t b = batch.size();
  std::vector<Var> inputs;
  inputs.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    Tensor x({b, d});
    Tensor live({b, w}, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t c = 0; c < d; ++c) x.at(i, c) = batch[i].frames.at(k, c);
      if (k < lengths[i]) {
        for (std::size_t c = 0; c < w; ++c) live.at(i, c) = 1.0;
      }
    }
    const mma::MmaHeads heads = build_mma(g, g.constant(std::move(x), "frames"), mma_config);
    std::vector<Var> parts;
    if (subset.va) parts.push_back(heads.va);
    if (subset.expr) parts.push_back(heads.expr);
    if (subset.au) parts.push_back(heads.au);
    const Var affect = parts.size() == 1 ? parts.front() : g.concat(parts);
    inputs.push_back(g.mask(affect, std::move(live)));
  }
  return mrnn::build_mrnn(g, inputs, lengths, mrnn_config);
}

Tensor predict_end_to_end(std::span<const data::VideoSample> videos,
                          const mma::MmaConfig& mma_config, const mrnn::MrnnConfig& mrnn_config,
                          const Subset& subset, const TensorMap& params) {
  constexpr std::size_t kChunk = 64;
  Tensor out({videos.size(), kNumIntensities});
  for (std::size_t start = 0; start < videos.size(); start += kChunk) {
    const auto chunk = videos.subspan(start, std::min(kChunk, videos.size() - start));
    Graph g;
    const auto net = build_end_to_end(g, chunk, mma_config, mrnn_config, subset);
    const Tensor& u = g.evaluate(net.output, params);
    std::copy(u.values().begin(), u.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(start * kNumIntensities));
  }
  return out;
}

}  // namespace feie::pipeline
