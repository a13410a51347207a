// Command-line front end: gen, train, eval, gradcheck, ablate.
//
// Config precedence, lowest first: preset defaults, --config file, explicit
// flags (--seed, --stage, --out, --data, then --set key=value in order).
//
// Exit codes: 0 ok, 1 check failed, 2 config error, 3 I/O error, 4 numeric
// failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "feie/autodiff/graph.hpp"
#include "feie/data/io.hpp"
#include "feie/error.hpp"
#include "feie/metrics/report.hpp"
#include "feie/mma/model.hpp"
#include "feie/pipeline/ablation.hpp"
#include "feie/pipeline/checkpoint.hpp"
#include "feie/pipeline/config.hpp"
#include "feie/pipeline/datasets.hpp"
#include "feie/pipeline/gradcheck.hpp"
#include "feie/pipeline/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace feie;
using namespace feie::pipeline;

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kIo = 3, kNumeric = 4 };

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::string stage;
  std::string out;
  std::string data;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run config");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--preset", f.preset, "Base preset")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--stage", f.stage, "Training stage")
      ->check(CLI::IsMember({"mma", "mrnn-frozen", "end-to-end"}));
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--data", f.data, "Dataset directory");
  cmd->add_option("--set", f.sets, "Override, e.g. --set train.epochs=50");
}

RunConfig load_config(const CommonFlags& f) {
  json patch = json::object();
  if (!f.config_path.empty()) {
    std::string text;
    try {
      text = data::read_text(f.config_path);
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
    patch = json::parse(text, nullptr, false);
    if (patch.is_discarded() || !patch.is_object()) {
      throw ConfigError("'" + f.config_path + "' is not a JSON object");
    }
  }
  json flags = json::object();
  if (!f.preset.empty()) flags["preset"] = f.preset;
  if (f.seed) flags["seed"] = *f.seed;
  if (!f.stage.empty()) flags["train"]["stage"] = f.stage;
  if (!f.out.empty()) flags["paths"]["out"] = f.out;
  if (!f.data.empty()) flags["paths"]["data"] = f.data;
  patch.merge_patch(flags);
  for (const auto& s : f.sets) patch.merge_patch(parse_assignment(s));
  return resolve_config(patch);
}

void echo_config(const RunConfig& config, const fs::path& dir) {
  data::write_text(dir / "config.json", to_json(config).dump(2) + "\n");
}

int cmd_gen(const RunConfig& config, const std::string& out_flag) {
  const fs::path dir = out_flag.empty() ? fs::path(config.paths.data) : fs::path(out_flag);
  const auto videos = make_videos(config);
  const auto frames = make_frames(config);
  write_datasets(dir, videos, frames);
  echo_config(config, dir);
  std::printf("videos: %zu train, %zu val, %zu test (t = %zu, d = %zu)\n", videos.train.size(),
              videos.val.size(), videos.test.size(), videos.manifest.steps, videos.manifest.dim);
  std::printf("frames: %zu train, %zu val, %zu test (d = %zu)\n", frames.train.size(),
              frames.val.size(), frames.test.size(), frames.manifest.dim);
  std::printf("wrote %s\n", dir.string().c_str());
  return kOk;
}

int cmd_train(const RunConfig& config) {
  const fs::path dir(config.paths.out);
  echo_config(config, dir);
  const TrainResult result = train_stage(config);
  save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
  data::write_text(dir / "curve.csv", curve_csv(result));
  data::write_text(dir / "curve.svg", curve_svg(result));
  const auto& best = result.curve[result.best_epoch];
  std::printf("stage %s: %zu epochs, best epoch %zu, %s = %.6f\n",
              std::string(stage_name(config.train.stage)).c_str(), config.train.epochs,
              result.best_epoch, result.metric_name.c_str(), best.val_metric);
  return kOk;
}

Tensor shuffled_rows(const Tensor& labels, std::uint64_t seed) {
  std::vector<std::size_t> order(labels.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Tensor out(labels.shape());
  for (std::size_t r = 0; r < labels.rows(); ++r) {
    for (std::size_t c = 0; c < labels.cols(); ++c) out.at(r, c) = labels.at(order[r], c);
  }
  return out;
}

void write_report(const fs::path& dir, const std::string& stem, const metrics::EvalReport& report) {
  data::write_text(dir / (stem + ".csv"), metrics::to_csv(report));
  data::write_text(dir / (stem + ".json"), metrics::to_json(report).dump(2) + "\n");
}

int eval_mma(const RunConfig& config, const Checkpoint& ckpt, const std::string& split,
             const fs::path& dir) {
  const auto frames = read_frames(config.paths.data).get(split);
  std::vector<data::FrameSample> va, expr, au;
  for (const auto& s : frames) {
    if (s.va) va.push_back(s);
    if (s.expr) expr.push_back(s);
    if (s.au) au.push_back(s);
  }
  auto heads = [&](const std::vector<data::FrameSample>& rows, std::size_t begin, std::size_t n) {
    const Tensor out = mma::mma_forward_batch(mma::stack_features(rows), config.mma, ckpt.params);
    Tensor part({rows.size(), n});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < n; ++c) part.at(r, c) = out.at(r, begin + c);
    }
    return part;
  };
  if (va.size() >= 2) {
    Tensor labels({va.size(), 2});
    for (std::size_t r = 0; r < va.size(); ++r) {
      labels.at(r, 0) = (*va[r].va)[0];
      labels.at(r, 1) = (*va[r].va)[1];
    }
    const auto report = metrics::evaluate(heads(va, 0, 2), labels, metrics::TaskKind::kValenceArousal);
    write_report(dir, "report_va", report);
    std::printf("mean CCC-VA: %s%%\n", metrics::percent(report.mean_ccc).c_str());
  }
  if (!expr.empty()) {
    Tensor labels({expr.size(), 1});
    for (std::size_t r = 0; r < expr.size(); ++r) labels.at(r, 0) = *expr[r].expr;
    const auto report =
        metrics::evaluate(heads(expr, 2, kNumExpressions), labels, metrics::TaskKind::kExpression);
    write_report(dir, "report_expr", report);
    std::printf("macro F1 expr: %s%%\n", metrics::percent(report.macro_f1).c_str());
  }
  if (!au.empty()) {
    Tensor labels({au.size(), kNumActionUnits});
    for (std::size_t r = 0; r < au.size(); ++r) {
      for (std::size_t c = 0; c < kNumActionUnits; ++c) labels.at(r, c) = (*au[r].au)[c];
    }
    const auto report = metrics::evaluate(heads(au, 2 + kNumExpressions, kNumActionUnits), labels,
                                          metrics::TaskKind::kActionUnit);
    write_report(dir, "report_au", report);
    std::printf("macro F1 AU: %s%%\n", metrics::percent(report.macro_f1).c_str());
  }
  return kOk;
}

int cmd_eval(const RunConfig& config, std::string checkpoint, const std::string& split,
             bool shuffle_labels) {
  const fs::path dir(config.paths.out);
  if (checkpoint.empty()) checkpoint = (dir / "checkpoint.bin").string();
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint '" + checkpoint + "' does not exist");
  Checkpoint ckpt;
  try {
    ckpt = load_checkpoint(checkpoint);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  check_compatible(ckpt, config);
  echo_config(config, dir);
  if (config.train.stage == Stage::kMma) return eval_mma(config, ckpt, split, dir);

  const VideoSplits videos = read_videos(config.paths.data);
  check_video_manifest(videos.manifest, config);
  const auto& set = videos.get(split);
  const Tensor preds = predict_videos(ckpt, config, set);
  Tensor labels = mrnn::stack_labels(set);
  if (shuffle_labels) labels = shuffled_rows(labels, data::derive_seed(config.seed, 40));
  const auto report = metrics::evaluate(preds, labels, metrics::TaskKind::kIntensity);
  write_report(dir, "report", report);
  for (const auto& c : report.pearson) {
    std::printf("%-14s %8s%s\n", c.name.c_str(), metrics::percent(c.value).c_str(),
                c.degenerate ? "  (degenerate)" : "");
  }
  std::printf("mean rho (%s, %zu videos): %s%%\n", split.c_str(), report.samples,
              metrics::percent(report.mean_pearson).c_str());
  return kOk;
}

int cmd_gradcheck(const GradcheckOptions& options, const std::string& fault, const std::string& out) {
  if (!fault.empty()) {
    const auto op = parse_op(fault);
    if (!op) throw ConfigError("unknown op '" + fault + "' for --inject-fault");
    autodiff::inject_backward_fault(op);
  }
  if (options.epsilon > 1e-4) {
    std::fprintf(stderr, "warning: epsilon %g is large; truncation error may dominate the check\n",
                 options.epsilon);
  }
  const GradcheckSuite suite = run_gradcheck_suite(options);
  autodiff::inject_backward_fault(std::nullopt);
  if (!out.empty()) {
    data::write_text(fs::path(out) / "gradcheck.json", to_json(suite).dump(2) + "\n");
    data::write_text(fs::path(out) / "gradcheck.csv", to_csv(suite));
  }
  std::fputs(to_csv(suite).c_str(), stdout);
  if (suite.passed()) {
    std::printf("gradcheck passed (epsilon %g, tolerance %g)\n", options.epsilon, options.tolerance);
    return kOk;
  }
  std::fprintf(stderr, "gradcheck FAILED for:\n");
  for (const auto& name : suite.failures()) std::fprintf(stderr, "  %s\n", name.c_str());
  return kCheckFailed;
}

int cmd_ablate(const RunConfig& config) {
  const fs::path dir(config.paths.out);
  const VideoSplits videos = read_videos(config.paths.data);
  RunConfig base = config;
  base.train.stage = Stage::kMrnnFrozen;
  check_video_manifest(videos.manifest, base);
  std::optional<Checkpoint> mma;
  if (base.data.raw_features) {
    if (base.paths.mma_checkpoint.empty()) throw ConfigError("raw-feature videos need paths.mma_checkpoint");
    mma = load_checkpoint(base.paths.mma_checkpoint);
  }
  echo_config(config, dir);
  const auto rows = run_ablation(base, videos, mma ? &*mma : nullptr, thread_count_from_env());
  data::write_text(dir / "ablation.csv", ablation_csv(rows));
  const std::string table = ablation_table(rows);
  data::write_text(dir / "ablation.txt", table);
  std::fputs(table.c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial-affect intensity estimation: data, training, evaluation and checks"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, ablate_flags;
  auto* gen = app.add_subcommand("gen", "Generate synthetic datasets");
  add_common(gen, gen_flags);

  auto* train = app.add_subcommand("train", "Train one stage");
  add_common(train, train_flags);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, eval_flags);
  std::string checkpoint, split = "test";
  bool shuffle_labels = false;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default <out>/checkpoint.bin)");
  eval->add_option("--split", split, "Dataset split")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_flag("--shuffle-labels", shuffle_labels, "Permute labels across videos (null baseline)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  GradcheckOptions gc;
  std::string fault, gc_out;
  gradcheck->add_option("--epsilon", gc.epsilon, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--coords", gc.coords, "Coordinates per parameter")->check(CLI::PositiveNumber);
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  gradcheck->add_option("--seed", gc.seed, "Seed for shapes and sampled coordinates");
  gradcheck->add_option("--out", gc_out, "Directory for gradcheck.json and gradcheck.csv");
  gradcheck->add_option("--inject-fault", fault, "Test hook: corrupt the backward rule of an op");

  auto* ablate = app.add_subcommand("ablate", "Sweep representation subsets, mask and loss");
  add_common(ablate, ablate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen(load_config(gen_flags), gen_flags.out);
    if (*train) return cmd_train(load_config(train_flags));
    if (*eval) return cmd_eval(load_config(eval_flags), checkpoint, split, shuffle_labels);
    if (*gradcheck) return cmd_gradcheck(gc, fault, gc_out);
    if (*ablate) return cmd_ablate(load_config(ablate_flags));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
