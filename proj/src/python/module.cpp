#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "feie/data/synthetic.hpp"
#include "feie/error.hpp"
#include "feie/metrics/metrics.hpp"
#include "feie/metrics/report.hpp"
#include "feie/mma/losses.hpp"
#include "feie/mma/relatedness.hpp"
#include "feie/mrnn/model.hpp"
#include "feie/pipeline/checkpoint.hpp"
#include "feie/pipeline/config.hpp"
#include "feie/pipeline/gradcheck.hpp"
#include "feie/pipeline/train.hpp"

namespace py = pybind11;
using namespace feie;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

/// Rank-1 input is read as a single row.
Tensor to_matrix(const Array& a) {
  if (a.ndim() == 1) return Tensor::matrix(1, static_cast<std::size_t>(a.shape(0)), to_tensor(a).data());
  if (a.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array");
  return to_tensor(a);
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

template <std::size_t N>
Array to_array(const std::array<double, N>& v) {
  Array out(static_cast<py::ssize_t>(N));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

/// nlohmann JSON → Python objects through the json module.
py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  const std::string text = py::module_::import("json").attr("dumps")(o).cast<std::string>();
  return nlohmann::json::parse(text);
}

/// Stacks videos of a (n, t, d) array plus lengths into samples.
std::vector<data::VideoSample> to_videos(const Array& frames, const std::vector<std::size_t>& lengths) {
  if (frames.ndim() != 3) throw ShapeError("frames must be an (n, t, d) array");
  const auto n = static_cast<std::size_t>(frames.shape(0));
  const auto t = static_cast<std::size_t>(frames.shape(1));
  const auto d = static_cast<std::size_t>(frames.shape(2));
  if (lengths.size() != n) throw ShapeError("need one length per video");
  std::vector<data::VideoSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "video-" + std::to_string(i);
    out[i].length = lengths[i];
    out[i].padding = data::Padding::kNoise;
    const double* begin = frames.data() + i * t * d;
    out[i].frames = Tensor({t, d}, std::vector<double>(begin, begin + t * d));
  }
  return out;
}

py::dict videos_to_python(const std::vector<data::VideoSample>& videos) {
  const std::size_t n = videos.size();
  const std::size_t t = videos.front().steps(), d = videos.front().dim();
  Array frames({n, t, d});
  Array labels({n, kNumIntensities});
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(videos[i].frames.values().begin(), videos[i].frames.values().end(),
              frames.mutable_data() + i * t * d);
    std::copy(videos[i].label.begin(), videos[i].label.end(),
              labels.mutable_data() + i * kNumIntensities);
    lengths.push_back(videos[i].length);
  }
  py::dict out;
  out["frames"] = frames;
  out["lengths"] = lengths;
  out["labels"] = labels;
  return out;
}

mma::DmForm dm_form(bool full_bce) { return full_bce ? mma::DmForm::kFullBce : mma::DmForm::kPrinted; }

}  // namespace

PYBIND11_MODULE(_feie, m) {
  m.doc() = "Multi-task affect extraction and masked recurrent aggregation.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.attr("expression_names") = std::vector<std::string>(kExpressionNames.begin(), kExpressionNames.end());
  m.attr("action_units") = std::vector<int>(kActionUnits.begin(), kActionUnits.end());
  m.attr("intensity_names") = std::vector<std::string>(kIntensityNames.begin(), kIntensityNames.end());

  // Expression/AU coupling and the multi-task losses.
  m.def("relatedness", [] { return to_array(mma::build_relatedness().as_tensor()); },
        "7 x 17 expression/AU relatedness matrix.");
  m.def("pseudo_au", [](const Array& expr) {
    return to_array(mma::pseudo_au(to_vector(expr), mma::build_relatedness()));
  }, py::arg("expr"));
  m.def("loss_ccc", [](const Array& p, const Array& y) { return mma::loss_ccc(to_matrix(p), to_matrix(y)); },
        py::arg("va_pred"), py::arg("va_label"));
  m.def("loss_cce", [](const Array& p, const std::vector<int>& y) { return mma::loss_cce(to_matrix(p), y); },
        py::arg("expr_probs"), py::arg("labels"));
  m.def("loss_bce", [](const Array& p, const Array& y) { return mma::loss_bce(to_matrix(p), to_matrix(y)); },
        py::arg("au_probs"), py::arg("labels"));
  m.def("loss_dm", [](const Array& au, const Array& pseudo, bool full_bce) {
    return mma::loss_dm(to_matrix(au), to_matrix(pseudo), dm_form(full_bce));
  }, py::arg("au_probs"), py::arg("pseudo"), py::arg("full_bce") = false);

  // Aggregator losses and masking.
  m.def("loss_pearson", [](const Array& p, const Array& y) {
    return mrnn::loss_pearson(to_matrix(p), to_matrix(y)).value;
  }, py::arg("preds"), py::arg("labels"));
  m.def("loss_mse", [](const Array& p, const Array& y) { return mrnn::loss_mse(to_matrix(p), to_matrix(y)); },
        py::arg("preds"), py::arg("labels"));
  m.def("mask_and_route", [](const Array& z, std::size_t length, std::size_t hidden) {
    const auto out = mrnn::mask_and_route(to_vector(z), length, hidden);
    return Array(static_cast<py::ssize_t>(out.size()), out.data());
  }, py::arg("embedding"), py::arg("length"), py::arg("hidden"));

  // Metrics.
  m.def("pearson", [](const Array& x, const Array& y) { return metrics::pearson(to_vector(x), to_vector(y)).value; },
        py::arg("x"), py::arg("y"));
  m.def("ccc", [](const Array& x, const Array& y) { return metrics::ccc(to_vector(x), to_vector(y)).value; },
        py::arg("x"), py::arg("y"));
  m.def("macro_f1", [](const std::vector<int>& p, const std::vector<int>& y, int n_classes) {
    return metrics::macro_f1(p, y, n_classes).macro;
  }, py::arg("preds"), py::arg("labels"), py::arg("n_classes") = 7);
  m.def("evaluate", [](const Array& p, const Array& y, const std::string& task) {
    return to_python(metrics::to_json(metrics::evaluate(to_matrix(p), to_matrix(y), metrics::parse_task(task))));
  }, py::arg("preds"), py::arg("labels"), py::arg("task") = "intensity",
     "Report as a dict; task is intensity, va, expr or au.");

  // Data.
  m.def("gen_videos", [](std::uint64_t seed, std::size_t n, std::size_t steps, std::size_t min_length,
                         std::size_t max_length, const std::string& padding) {
    data::VideoRecipe r;
    r.steps = steps;
    r.min_length = min_length;
    r.max_length = max_length;
    if (padding != "zero" && padding != "noise") throw ConfigError("padding must be zero or noise");
    r.padding = padding == "noise" ? data::Padding::kNoise : data::Padding::kZero;
    return videos_to_python(data::gen_video_dataset(seed, n, r).samples);
  }, py::arg("seed"), py::arg("n"), py::arg("steps") = 32, py::arg("min_length") = 8,
     py::arg("max_length") = 32, py::arg("padding") = "zero",
     "Synthetic affect videos: dict of frames (n, t, 26), lengths and labels (n, 7).");

  // Configuration, training and inference.
  m.def("resolve_config", [](const py::object& overrides) {
    return to_python(pipeline::to_json(pipeline::resolve_config(from_python(overrides))));
  }, py::arg("overrides") = py::dict(), "Preset plus overrides, validated.");
  m.def("init_mrnn", [](const py::object& overrides, std::uint64_t seed) {
    const auto c = pipeline::resolve_config(from_python(overrides));
    py::dict out;
    for (const auto& [name, t] : mrnn::init_mrnn_params(c.mrnn, seed)) out[py::str(name)] = to_array(t);
    return out;
  }, py::arg("config") = py::dict(), py::arg("seed") = 0);
  m.def("mrnn_predict", [](const py::dict& params, const Array& frames, const std::vector<std::size_t>& lengths,
                           const py::object& overrides) {
    auto c = pipeline::resolve_config(from_python(overrides));
    c.mrnn.input_dim = static_cast<std::size_t>(frames.ndim() == 3 ? frames.shape(2) : 0);
    TensorMap p;
    for (const auto& [name, value] : params) p[name.cast<std::string>()] = to_tensor(value.cast<Array>());
    return to_array(mrnn::predict(to_videos(frames, lengths), c.mrnn, p));
  }, py::arg("params"), py::arg("frames"), py::arg("lengths"), py::arg("config") = py::dict());
  m.def("train", [](const py::object& overrides) {
    const auto c = pipeline::resolve_config(from_python(overrides));
    const auto result = pipeline::train_stage(c);
    py::dict out;
    out["best_epoch"] = result.best_epoch;
    out["metric"] = result.metric_name;
    out["curve"] = pipeline::curve_csv(result);
    return out;
  }, py::arg("config"), "Runs one training stage from paths in the config; no files are written.");
  m.def("load_checkpoint", [](const std::string& path) {
    const auto ck = pipeline::load_checkpoint(path);
    py::dict params;
    for (const auto& [name, t] : ck.params) params[py::str(name)] = to_array(t);
    return py::make_tuple(to_python(ck.model), to_python(ck.info), params);
  }, py::arg("path"), "(model, info, params) of a checkpoint file.");
  m.def("gradcheck", [](double epsilon, std::size_t coords, double tolerance, std::uint64_t seed) {
    pipeline::GradcheckOptions o{epsilon, coords, tolerance, seed};
    return to_python(pipeline::to_json(pipeline::run_gradcheck_suite(o)));
  }, py::arg("epsilon") = 1e-6, py::arg("coords") = 100, py::arg("tolerance") = 1e-4, py::arg("seed") = 0);
}
