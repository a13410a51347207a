// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Pass `--only N` (repeatable) to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feie/data/io.hpp"
#include "feie/error.hpp"
#include "feie/metrics/metrics.hpp"
#include "feie/metrics/report.hpp"
#include "feie/mma/losses.hpp"
#include "feie/mma/relatedness.hpp"
#include "feie/mrnn/model.hpp"
#include "feie/pipeline/ablation.hpp"
#include "feie/pipeline/checkpoint.hpp"
#include "feie/pipeline/datasets.hpp"
#include "feie/pipeline/gradcheck.hpp"
#include "feie/pipeline/train.hpp"
#include "support.hpp"

using namespace feie;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and thresholds.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEpsilon = 1e-6;
constexpr std::size_t kGradCoords = 100;
constexpr double kGradBudgetSeconds = 120.0;
constexpr double kOracleTolerance = 1e-12;
constexpr std::size_t kSimplexTrials = 1000;
constexpr std::size_t kMaskTrials = 100;
constexpr std::size_t kIdentityTrials = 200;
constexpr double kIdentityTolerance = 1e-10;
constexpr std::size_t kAgreementTrials = 200;
constexpr double kAgreementTolerance = 1e-12;
constexpr double kBruteForceTolerance = 1e-10;
constexpr std::size_t kLearnEpochs = 300;
constexpr double kLearnTrainRho = 0.95;
constexpr double kLearnHeldOutRho = 0.7;
constexpr double kLearnBudgetSeconds = 600.0;
constexpr double kMaskMargin = 0.03;
constexpr std::size_t kAblationSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 1 --------------------------------------------------------------------------
Outcome gradient_fidelity() {
  const auto start = Clock::now();
  pipeline::GradcheckOptions options;
  options.epsilon = kGradEpsilon;
  options.coords = kGradCoords;
  options.tolerance = kGradTolerance;
  const auto suite = pipeline::run_gradcheck_suite(options);
  const double elapsed = seconds_since(start);

  const std::set<std::string> required = {"L_CCC", "L_CCE", "L_BCE", "L_DM",   "L_MMA",
                                          "L_pearson", "L_mse", "trunk", "heads", "gru",
                                          "mask", "ff1", "ff_out"};
  std::set<std::string> seen;
  double worst = 0.0;
  std::size_t fewest = SIZE_MAX;
  bool ok = true;
  for (const auto& c : suite.cases) {
    seen.insert(c.name);
    worst = std::max(worst, c.max_rel_error);
    fewest = std::min(fewest, c.coords);
    ok = ok && c.passed && c.max_rel_error < kGradTolerance && c.coords >= kGradCoords;
  }
  ok = ok && seen == required && elapsed < kGradBudgetSeconds;
  return {ok, fmt("%g cases, worst rel err %.2e, min coords %g, %.1f s", double(suite.cases.size()),
                  worst, double(fewest), elapsed)};
}

// 2 --------------------------------------------------------------------------
Outcome relatedness_table() {
  const auto m = mma::build_relatedness();
  const auto& literal = test::relatedness_literal();
  std::size_t agree = 0;
  for (std::size_t e = 0; e < kNumExpressions; ++e) {
    const auto& units = literal.at(std::string(kExpressionNames[e]));
    for (std::size_t a = 0; a < kNumActionUnits; ++a) {
      agree += m.related(e, a) == (units.count(kActionUnits[a]) != 0);
    }
  }
  const std::size_t total = kNumExpressions * kNumActionUnits;
  return {agree == total, fmt("%g / %g entries agree", double(agree), double(total))};
}

// 3 --------------------------------------------------------------------------
Outcome pseudo_au_and_dm() {
  const auto m = mma::build_relatedness();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> prob(1e-6, 1.0 - 1e-6);
  double worst_pseudo = 0.0, worst_dm = 0.0;
  for (std::size_t trial = 0; trial < kSimplexTrials; ++trial) {
    const auto expr = test::random_simplex(kNumExpressions, rng);
    const auto got = mma::pseudo_au(expr, m);
    const auto want = test::oracle_pseudo_au(expr);
    Tensor au({1, kNumActionUnits}), pseudo({1, kNumActionUnits});
    for (std::size_t a = 0; a < kNumActionUnits; ++a) {
      worst_pseudo = std::max(worst_pseudo, std::abs(got[a] - want[a]));
      au[a] = prob(rng);
      pseudo[a] = want[a];
    }
    // Scalar loop: −Σ_a r′_a log r_a.
    double dm = 0.0;
    for (std::size_t a = 0; a < kNumActionUnits; ++a) dm -= want[a] * std::log(au[a]);
    worst_dm = std::max(worst_dm, std::abs(mma::loss_dm(au, pseudo) - dm));
  }
  const bool ok = worst_pseudo <= kOracleTolerance && worst_dm <= kOracleTolerance;
  return {ok, fmt("max |pseudo_au - loop| %.1e, max |loss_dm - loop| %.1e over %g vectors",
                  worst_pseudo, worst_dm, double(kSimplexTrials))};
}

// 4 --------------------------------------------------------------------------
Outcome masking_invariants() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> steps(2, 12), dim(1, 8), hidden(1, 6), units(1, 6);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t output_violations = 0, gradient_violations = 0, live_rows = 0;
  for (std::size_t trial = 0; trial < kMaskTrials; ++trial) {
    mrnn::MrnnConfig c;
    c.steps = steps(rng);
    c.input_dim = dim(rng);
    c.hidden = hidden(rng);
    c.ff_units = units(rng);
    const TensorMap params = mrnn::init_mrnn_params(c, rng());
    const std::size_t l = std::uniform_int_distribution<std::size_t>(1, c.steps - 1)(rng);

    data::VideoSample v;
    v.id = "v";
    v.length = l;
    v.padding = data::Padding::kNoise;
    v.frames = Tensor({c.steps, c.input_dim});
    for (double& x : v.frames.values()) x = normal(rng);
    for (double& y : v.label) y = unit(rng);

    data::VideoSample w = v;
    for (std::size_t r = l; r < c.steps; ++r) {
      for (std::size_t k = 0; k < c.input_dim; ++k) w.frames.at(r, k) = 5.0 * normal(rng);
    }
    if (mrnn::mrnn_forward(v, c, params) != mrnn::mrnn_forward(w, c, params)) ++output_violations;

    // Single-sample batch; MSE so the gradient is not trivially zero.
    const std::vector<data::VideoSample> batch = {w};
    const auto step = mrnn::mrnn_loss_and_gradients(batch, c, params, mrnn::LossKind::kMse);
    const Tensor& g = step.gradients.at("mrnn.ff1.W");
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t k = 0; k < g.cols(); ++k) {
        if (r >= l * c.hidden && g.at(r, k) != 0.0) ++gradient_violations;
        if (r < l * c.hidden && g.at(r, k) != 0.0) ++live_rows;
      }
    }
  }
  const bool ok = output_violations == 0 && gradient_violations == 0 && live_rows > 0;
  return {ok, fmt("%g output changes, %g nonzero routed-out ff1 gradients over %g pairs",
                  double(output_violations), double(gradient_violations), double(kMaskTrials))};
}

// 5 --------------------------------------------------------------------------
Outcome loss_identities() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> rows(3, 40);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-5.0, 5.0);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kIdentityTrials; ++trial) {
    const std::size_t n = rows(rng);
    const Tensor labels = test::random_tensor({n, kNumIntensities}, rng, 0.0, 1.0);
    const Tensor va = test::random_tensor({n, 2}, rng);
    const Tensor preds = test::random_tensor({n, kNumIntensities}, rng);
    Tensor negated = labels, affine = preds;
    for (double& x : negated.values()) x = -x;
    for (std::size_t k = 0; k < kNumIntensities; ++k) {
      const double a = scale(rng), b = shift(rng);
      for (std::size_t r = 0; r < n; ++r) affine.at(r, k) = a * preds.at(r, k) + b;
    }
    worst = std::max({worst, std::abs(mma::loss_ccc(va, va)),
                      std::abs(mrnn::loss_pearson(labels, labels).value),
                      std::abs(mrnn::loss_pearson(negated, labels).value - 2.0),
                      std::abs(mrnn::loss_pearson(affine, labels).value -
                               mrnn::loss_pearson(preds, labels).value)});
  }
  return {worst <= kIdentityTolerance,
          fmt("max deviation %.1e over %g cases", worst, double(kIdentityTrials))};
}

// 6 --------------------------------------------------------------------------
Outcome metric_loss_agreement() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> rows(2, 1000);
  std::uniform_int_distribution<int> cls(0, 6);
  double worst_loss = 0.0, worst_brute = 0.0;
  for (std::size_t trial = 0; trial < kAgreementTrials; ++trial) {
    const std::size_t n = rows(rng);
    const Tensor labels = test::random_tensor({n, kNumIntensities}, rng, 0.0, 1.0);
    Tensor preds = test::random_tensor({n, kNumIntensities}, rng);
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] += 0.5 * labels[i];

    double mean_rho = 0.0;
    for (std::size_t k = 0; k < kNumIntensities; ++k) {
      const auto p = test::column(preds, k), y = test::column(labels, k);
      const double rho = metrics::pearson(p, y).value;
      mean_rho += rho / kNumIntensities;
      worst_brute = std::max({worst_brute, std::abs(rho - test::oracle_pearson(p, y)),
                              std::abs(metrics::ccc(p, y).value - test::oracle_ccc(p, y))});
    }
    worst_loss =
        std::max(worst_loss, std::abs(mrnn::loss_pearson(preds, labels).value - (1.0 - mean_rho)));

    std::vector<int> pc(n), yc(n);
    for (int& v : pc) v = cls(rng);
    for (int& v : yc) v = cls(rng);
    const auto f1 = metrics::macro_f1(pc, yc, 7);
    for (int c = 0; c < 7; ++c) {
      worst_brute = std::max(worst_brute, std::abs(f1.f1[static_cast<std::size_t>(c)] -
                                                   test::oracle_f1(pc, yc, c)));
    }
  }
  const bool ok = worst_loss <= kAgreementTolerance && worst_brute <= kBruteForceTolerance;
  return {ok, fmt("max |L_pearson - (1 - mean rho)| %.1e, max metric vs brute force %.1e",
                  worst_loss, worst_brute)};
}

// 7 --------------------------------------------------------------------------
double mean_rho(const Tensor& preds, const std::vector<data::VideoSample>& videos) {
  return metrics::evaluate(preds, mrnn::stack_labels(videos), metrics::TaskKind::kIntensity)
      .mean_pearson;
}

Outcome learnability() {
  pipeline::RunConfig c = pipeline::preset("desk");
  c.seed = 0;
  c.train.epochs = kLearnEpochs;
  const auto start = Clock::now();
  const auto videos = pipeline::make_videos(c);
  const auto result = pipeline::train_videos(c, videos, nullptr);
  const double train_rho =
      mean_rho(pipeline::predict_videos(result.checkpoint, c, videos.train), videos.train);
  const double test_rho =
      mean_rho(pipeline::predict_videos(result.checkpoint, c, videos.test), videos.test);
  const double elapsed = seconds_since(start);
  const bool ok = videos.train.size() == 128 && train_rho >= kLearnTrainRho &&
                  test_rho >= kLearnHeldOutRho && elapsed < kLearnBudgetSeconds;
  return {ok, fmt("train rho %.4f, held-out rho %.4f (best epoch %g), %.0f s", train_rho, test_rho,
                  double(result.best_epoch), elapsed)};
}

// 8 --------------------------------------------------------------------------
Outcome mask_ablation() {
  double on = 0.0, off = 0.0;
  std::string per_seed;
  for (std::size_t seed = 0; seed < kAblationSeeds; ++seed) {
    pipeline::RunConfig c = pipeline::preset("desk");
    c.seed = seed;
    c.data.padding = data::Padding::kNoise;
    const auto videos = pipeline::make_videos(c);
    const auto all = pipeline::parse_subset("all");
    const double a =
        pipeline::run_variant(c, videos, nullptr, all, true, mrnn::LossKind::kPearson).test_mean_rho;
    const double b =
        pipeline::run_variant(c, videos, nullptr, all, false, mrnn::LossKind::kPearson).test_mean_rho;
    on += a / kAblationSeeds;
    off += b / kAblationSeeds;
    per_seed += fmt(" %.3f/%.3f", a, b);
  }
  return {on - off >= kMaskMargin,
          fmt("mask on %.4f, off %.4f, margin %.4f;", on, off, on - off) + " per seed" + per_seed};
}

// 9 --------------------------------------------------------------------------
Outcome channel_ablation() {
  const std::vector<std::string> names = {"all", "va", "expr", "au"};
  std::vector<double> means(names.size(), 0.0);
  for (std::size_t seed = 0; seed < kAblationSeeds; ++seed) {
    pipeline::RunConfig c = pipeline::preset("desk");
    c.seed = seed;
    const auto videos = pipeline::make_videos(c);
    for (std::size_t i = 0; i < names.size(); ++i) {
      means[i] += pipeline::run_variant(c, videos, nullptr, pipeline::parse_subset(names[i]), true,
                                        mrnn::LossKind::kPearson)
                      .test_mean_rho /
                  kAblationSeeds;
    }
  }
  bool ok = true;
  for (std::size_t i = 1; i < names.size(); ++i) ok = ok && means[0] >= means[i];
  return {ok, fmt("all %.4f, va %.4f, expr %.4f, au %.4f", means[0], means[1], means[2], means[3])};
}

// 10 -------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  pipeline::RunConfig c = pipeline::preset("desk");
  c.seed = 11;
  c.data.videos = 48;
  c.data.frames = 96;
  c.train.epochs = 5;
  const fs::path root = fs::temp_directory_path() / "feie_acceptance_determinism";
  fs::remove_all(root);

  std::vector<std::string> broken;
  auto expect = [&](bool cond, const char* what) {
    if (!cond) broken.emplace_back(what);
  };

  // Datasets: regenerate twice, write twice, compare bytes and round-trip.
  const auto v1 = pipeline::make_videos(c), v2 = pipeline::make_videos(c);
  const auto f1 = pipeline::make_frames(c), f2 = pipeline::make_frames(c);
  expect(v1.train == v2.train && v1.val == v2.val && v1.test == v2.test, "video generation");
  expect(f1.train == f2.train && f1.test == f2.test, "frame generation");
  pipeline::write_datasets(root / "a", v1, f1);
  pipeline::write_datasets(root / "b", v2, f2);
  for (const char* f : {"videos/train.jsonl", "videos/val.jsonl", "videos/test.jsonl",
                        "videos/manifest.json", "frames/train.jsonl", "frames/manifest.json"}) {
    expect(slurp(root / "a" / f) == slurp(root / "b" / f), "dataset bytes");
  }
  const auto rv = pipeline::read_videos(root / "a");
  const auto rf = pipeline::read_frames(root / "a");
  expect(rv.train == v1.train && rv.val == v1.val && rv.test == v1.test &&
             rv.manifest == v1.manifest,
         "video round-trip");
  expect(rf.train == f1.train && rf.val == f1.val && rf.test == f1.test, "frame round-trip");

  // Checkpoints: identical runs, identical bytes, exact file round-trip.
  const auto r1 = pipeline::train_videos(c, v1, nullptr);
  const auto r2 = pipeline::train_videos(c, v2, nullptr);
  expect(pipeline::encode_checkpoint(r1.checkpoint) == pipeline::encode_checkpoint(r2.checkpoint),
         "checkpoint bytes");
  pipeline::save_checkpoint(root / "ckpt.bin", r1.checkpoint);
  const auto loaded = pipeline::load_checkpoint(root / "ckpt.bin");
  expect(loaded == r1.checkpoint, "checkpoint round-trip");
  expect(slurp(root / "ckpt.bin") == pipeline::encode_checkpoint(loaded), "checkpoint re-encode");

  // Reports.
  auto report = [&](const pipeline::Checkpoint& ck) {
    const Tensor preds = pipeline::predict_videos(ck, c, v1.test);
    const auto r = metrics::evaluate(preds, mrnn::stack_labels(v1.test),
                                     metrics::TaskKind::kIntensity);
    return metrics::to_csv(r) + metrics::to_json(r).dump();
  };
  expect(report(r1.checkpoint) == report(r2.checkpoint) && report(loaded) == report(r1.checkpoint),
         "report bytes");
  expect(pipeline::curve_csv(r1) == pipeline::curve_csv(r2), "curve bytes");
  fs::remove_all(root);

  std::string detail = broken.empty() ? "datasets, checkpoints and reports identical" : "differs:";
  for (const auto& b : broken) detail += " " + b;
  return {broken.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "relatedness table", relatedness_table},
      {3, "pseudo-AU and DM oracles", pseudo_au_and_dm},
      {4, "masking invariants", masking_invariants},
      {5, "loss identities", loss_identities},
      {6, "metric/loss agreement", metric_loss_agreement},
      {7, "learnability", learnability},
      {8, "mask ablation direction", mask_ablation},
      {9, "channel ablation direction", channel_ablation},
      {10, "determinism and round-trips", determinism},
  };

  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0) only.insert(std::atoi(argv[++i]));
  }

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
