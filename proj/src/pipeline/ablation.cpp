#include "feie/pipeline/ablation.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "feie/error.hpp"
#include "feie/metrics/report.hpp"
#include "feie/pipeline/train.hpp"

namespace feie::pipeline {

AblationRow run_variant(const RunConfig& base, const VideoSplits& videos, const Checkpoint* mma,
                        const Subset& subset, bool mask, mrnn::LossKind loss) {
  RunConfig config = base;
  config.train.stage = Stage::kMrnnFrozen;
  config.subset = subset;
  config.mrnn.input_dim = subset.width();
  config.mrnn.mask = mask;
  config.loss = loss;

  const TrainResult result = train_videos(config, videos, mma);
  const Tensor preds = predict_videos(result.checkpoint, config, videos.test);
  AblationRow row{subset, mask, loss};
  row.val_mean_rho = result.curve[result.best_epoch].val_metric;
  row.test_mean_rho =
      metrics::evaluate(preds, mrnn::stack_labels(videos.test), metrics::TaskKind::kIntensity).mean_pearson;
  return row;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const VideoSplits& videos,
                                      const Checkpoint* mma, std::size_t threads) {
  struct Variant {
    Subset subset;
    bool mask;
    mrnn::LossKind loss;
  };
  std::vector<Variant> plan;
  for (const Subset& s : all_subsets()) {
    for (bool mask : {true, false}) {
      for (auto loss : {mrnn::LossKind::kPearson, mrnn::LossKind::kMse}) plan.push_back({s, mask, loss});
    }
  }

  std::vector<AblationRow> rows(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < plan.size();) {
      try {
        rows[i] = run_variant(base, videos, mma, plan[i].subset, plan[i].mask, plan[i].loss);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, plan.size()));
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::size_t thread_count_from_env() {
  const char* value = std::getenv("FEIE_THREADS");
  if (value == nullptr || *value == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(value, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("FEIE_THREADS must be a positive integer");
  return static_cast<std::size_t>(n);
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "schema_version,1\n";
  out << "subset,width,mask,loss,val_mean_rho,test_mean_rho,test_mean_rho_percent\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%s,%s,%.10g,%.10g,%s\n", subset_name(r.subset).c_str(),
                  r.subset.width(), r.mask ? "on" : "off", std::string(mrnn::loss_name(r.loss)).c_str(),
                  r.val_mean_rho, r.test_mean_rho, metrics::percent(r.test_mean_rho).c_str());
    out << buf;
  }
  return out.str();
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %5s  %-5s %-8s %12s\n", "subset", "width", "mask", "loss",
                "mean rho (%)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %5zu  %-5s %-8s %12s\n", subset_name(r.subset).c_str(),
                  r.subset.width(), r.mask ? "on" : "off", std::string(mrnn::loss_name(r.loss)).c_str(),
                  metrics::percent(r.test_mean_rho).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace feie::pipeline
