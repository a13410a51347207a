#include "feie/pipeline/gradcheck.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "feie/data/synthetic.hpp"
#include "feie/mma/model.hpp"
#include "feie/mrnn/model.hpp"

namespace feie::pipeline {

using autodiff::Graph;
using autodiff::Var;

namespace {

constexpr std::string_view kSchemaVersion = "1";

// Wide enough that every layer group reaches 100 coordinates.
mma::MmaConfig small_mma() { return {.input_dim = 12, .width = 10, .blocks = 1}; }

mrnn::MrnnConfig small_mrnn(std::size_t input_dim) {
  return {.steps = 8, .input_dim = input_dim, .hidden = 4, .ff_units = 14};
}

std::vector<data::FrameSample> frames(std::uint64_t seed, std::array<double, 4> mix) {
  data::FrameRecipe r;
  r.input_dim = small_mma().input_dim;
  r.feature_noise = 0.3;
  r.mix = mix;
  return data::gen_frame_dataset(seed, 10, r).samples;
}

std::vector<data::VideoSample> videos(std::uint64_t seed, std::size_t n, std::size_t dim,
                                      std::size_t min_length, std::size_t max_length) {
  data::VideoRecipe r;
  r.steps = 8;
  r.min_length = min_length;
  r.max_length = max_length;
  r.raw_features = dim != kAffectDim;
  r.frame.input_dim = dim;
  r.padding = data::Padding::kNoise;
  return data::gen_video_dataset(seed, n, r).samples;
}

GradcheckCase finish(std::string name, const autodiff::GradientReport& report, double tol) {
  GradcheckCase c;
  c.name = std::move(name);
  c.kind = "loss";
  c.parameters = report.parameters;
  c.coords = report.coords_checked();
  c.max_rel_error = report.max_rel_error();
  c.passed = c.max_rel_error < tol;
  return c;
}

std::string layer_of(const std::string& param) {
  if (param.starts_with("mma.in") || param.starts_with("mma.block")) return "trunk";
  if (param.starts_with("mma.")) return "heads";
  if (param.starts_with("mrnn.gru")) return "gru";
  if (param.starts_with("mrnn.ff1")) return "ff1";
  if (param.starts_with("mrnn.out")) return "ff_out";
  return "other";
}

}  // namespace

bool GradcheckSuite::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.passed; });
}

std::vector<std::string> GradcheckSuite::failures() const {
  std::vector<std::string> out;
  for (const auto& c : cases) {
    for (const auto& p : c.parameters) {
      if (p.max_rel_error >= options.tolerance) out.push_back(c.name + ":" + p.name);
    }
  }
  return out;
}

GradcheckSuite run_gradcheck_suite(const GradcheckOptions& options) {
  GradcheckSuite suite;
  suite.options = options;
  suite.truncation_warning = options.epsilon > 1e-4;
  const double eps = options.epsilon;
  const std::size_t n = options.coords;
  const double tol = options.tolerance;

  // Multi-task head losses.
  const auto mcfg = small_mma();
  const TensorMap mma_params = mma::init_mma_params(mcfg, options.seed + 11);
  {
    const auto full = frames(options.seed + 1, {0.0, 0.0, 0.0, 1.0});
    Graph g;
    const auto heads = mma::build_mma(g, g.constant(mma::stack_features(full)), mcfg);
    const auto lg = mma::build_mma_loss(g, heads, full, mcfg);
    const std::pair<const char*, Var> terms[] = {
        {"L_CCC", lg.ccc}, {"L_CCE", lg.cce}, {"L_BCE", lg.bce}, {"L_DM", lg.dm}};
    for (const auto& [name, root] : terms) {
      suite.cases.push_back(finish(name, autodiff::grad_check(g, root, mma_params, eps, n, options.seed), tol));
    }
  }
  {
    // Partial annotations: every term sees a different subset of rows.
    const auto mixed = frames(options.seed + 2, {0.3, 0.2, 0.2, 0.3});
    Graph g;
    const auto heads = mma::build_mma(g, g.constant(mma::stack_features(mixed)), mcfg);
    const auto lg = mma::build_mma_loss(g, heads, mixed, mcfg);
    suite.cases.push_back(
        finish("L_MMA", autodiff::grad_check(g, lg.total, mma_params, eps, n, options.seed), tol));
  }

  // Aggregator losses on affect inputs; lengths stay below t so the mask bites.
  const auto rcfg = small_mrnn(5);
  const TensorMap mrnn_params = mrnn::init_mrnn_params(rcfg, options.seed + 12);
  const auto vids = videos(options.seed + 3, 4, 5, 2, 7);
  for (auto kind : {mrnn::LossKind::kPearson, mrnn::LossKind::kMse}) {
    Graph g;
    const auto net = mrnn::build_mrnn(g, mrnn::step_inputs(g, vids), [&] {
      std::vector<std::size_t> l;
      for (const auto& v : vids) l.push_back(v.length);
      return l;
    }(), rcfg);
    const Var loss = mrnn::build_loss(g, net.output, mrnn::stack_labels(vids), kind);
    const bool pearson = kind == mrnn::LossKind::kPearson;
    auto c = finish(pearson ? "L_pearson" : "L_mse",
                    autodiff::grad_check(g, loss, mrnn_params, eps, n, options.seed), tol);
    if (pearson) {
      // Pearson is invariant to a per-column shift of u, so the output bias
      // has an identically zero gradient and both sides measure only rounding.
      std::erase_if(c.parameters, [](const auto& p) { return p.name == "mrnn.out.b"; });
      c.invariant.push_back("mrnn.out.b");
      c.coords = 0;
      c.max_rel_error = 0.0;
      for (const auto& p : c.parameters) {
        c.coords += p.coords_checked;
        c.max_rel_error = std::max(c.max_rel_error, p.max_rel_error);
      }
      c.passed = c.max_rel_error < tol;
    }
    suite.cases.push_back(std::move(c));
  }
  {
    // Single short video: ff1 rows past l·d′ must carry exact zeros.
    const auto one = videos(options.seed + 4, 1, 5, 3, 3);
    Graph g;
    const auto net = mrnn::build_mrnn(g, mrnn::step_inputs(g, one), std::vector<std::size_t>{one[0].length}, rcfg);
    const Var loss = g.sum(net.output * net.output);
    auto c = finish("mask", autodiff::grad_check(g, loss, mrnn_params, eps, rcfg.embedding_dim() * rcfg.ff_units, options.seed), tol);
    c.kind = "layer";
    c.parameters.erase(std::remove_if(c.parameters.begin(), c.parameters.end(),
                                      [](const auto& p) { return p.name != "mrnn.ff1.W"; }),
                       c.parameters.end());
    c.coords = c.parameters.empty() ? 0 : c.parameters.front().coords_checked;
    c.max_rel_error = c.parameters.empty() ? 0.0 : c.parameters.front().max_rel_error;
    c.passed = c.max_rel_error < tol;
    suite.cases.push_back(std::move(c));
  }
  // Layer summaries over the loss checks.
  for (const char* layer : {"trunk", "heads", "gru", "ff1", "ff_out"}) {
    GradcheckCase c;
    c.name = layer;
    c.kind = "layer";
    for (const auto& lc : suite.cases) {
      if (lc.kind != "loss") continue;
      for (const auto& p : lc.parameters) {
        if (layer_of(p.name) != layer) continue;
        auto q = p;
        q.name = lc.name + ":" + p.name;
        c.coords += q.coords_checked;
        c.max_rel_error = std::max(c.max_rel_error, q.max_rel_error);
        c.parameters.push_back(std::move(q));
      }
    }
    c.passed = c.max_rel_error < tol;
    suite.cases.push_back(std::move(c));
  }
  return suite;
}

nlohmann::json to_json(const GradcheckSuite& suite) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : suite.cases) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : c.parameters) {
      params.push_back({{"name", p.name},
                        {"coords", p.coords_checked},
                        {"max_rel_error", p.max_rel_error},
                        {"worst_index", p.worst_index},
                        {"worst_analytic", p.worst_analytic},
                        {"worst_numeric", p.worst_numeric}});
    }
    cases.push_back({{"name", c.name},
                     {"kind", c.kind},
                     {"coords", c.coords},
                     {"max_rel_error", c.max_rel_error},
                     {"passed", c.passed},
                     {"invariant", c.invariant},
                     {"parameters", params}});
  }
  return {{"schema_version", kSchemaVersion},
          {"epsilon", suite.options.epsilon},
          {"tolerance", suite.options.tolerance},
          {"coords_per_parameter", suite.options.coords},
          {"truncation_warning", suite.truncation_warning},
          {"passed", suite.passed()},
          {"cases", cases}};
}

std::string to_csv(const GradcheckSuite& suite) {
  std::ostringstream out;
  out << "schema_version," << kSchemaVersion << "\n";
  out << "case,kind,coords,max_rel_error,passed\n";
  char buf[64];
  for (const auto& c : suite.cases) {
    std::snprintf(buf, sizeof buf, "%.6e", c.max_rel_error);
    out << c.name << "," << c.kind << "," << c.coords << "," << buf << ","
        << (c.passed ? "pass" : "FAIL") << "\n";
  }
  return out.str();
}

std::optional<autodiff::Op> parse_op(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(autodiff::Op::kSelectRows); ++i) {
    const auto op = static_cast<autodiff::Op>(i);
    if (autodiff::op_name(op) == name) return op;
  }
  return std::nullopt;
}

}  // namespace feie::pipeline
