#pragma once

// Shared helpers for the unit and acceptance tests: random fixtures, golden
// files, and reference implementations written independently of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "feie/data/samples.hpp"
#include "feie/labels.hpp"
#include "feie/tensor.hpp"

namespace feie::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

/// Uniform point on the probability simplex (normalised exponentials).
inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> dist(1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& v : p) total += (v = dist(rng));
  for (double& v : p) v /= total;
  return p;
}

// ---------------------------------------------------------------- golden files

/// Compares `value` with tests/golden/<name>.json. With FEIE_UPDATE_GOLDEN set
/// the file is (re)written instead and the comparison trivially passes.
/// Numbers are compared with an absolute tolerance so the files survive
/// reformatting by hand.
inline bool json_close(const nlohmann::json& a, const nlohmann::json& b, double tol) {
  if (a.is_number() && b.is_number()) {
    return std::abs(a.get<double>() - b.get<double>()) <= tol;
  }
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_close(a[i], b[i], tol)) return false;
    }
    return true;
  }
  if (a.is_object() && b.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_close(it.value(), b[it.key()], tol)) return false;
    }
    return true;
  }
  return a == b;
}

inline bool matches_golden(const std::string& name, const nlohmann::json& value,
                           double tol = 1e-12) {
  const std::filesystem::path path = std::filesystem::path(FEIE_GOLDEN_DIR) / (name + ".json");
  if (std::getenv("FEIE_UPDATE_GOLDEN") != nullptr) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << value.dump(2) << "\n";
    return true;
  }
  std::ifstream in(path);
  if (!in) return false;
  return json_close(nlohmann::json::parse(in), value, tol);
}

inline nlohmann::json to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"values", t.data()}};
}

// --------------------------------------------------------------------- oracles

/// Expression/AU table transcribed by expression name and FACS number,
/// prototypical and observational units together.
inline const std::map<std::string, std::set<int>>& relatedness_literal() {
  static const std::map<std::string, std::set<int>> table = {
      {"happiness", {12, 25, 6}},
      {"sadness", {4, 15, 1, 6, 11, 17}},
      {"fear", {1, 4, 20, 25, 2, 5, 26}},
      {"anger", {4, 7, 24, 10, 17, 23}},
      {"surprise", {1, 2, 25, 26, 5}},
      {"disgust", {9, 10, 17, 4, 24}},
      {"neutral", {}},
  };
  return table;
}

/// Σ_e expr[e]·[AU related to e], looping over FACS numbers.
inline std::array<double, kNumActionUnits> oracle_pseudo_au(const std::vector<double>& expr) {
  std::array<double, kNumActionUnits> out{};
  const auto& table = relatedness_literal();
  for (std::size_t a = 0; a < kNumActionUnits; ++a) {
    double acc = 0.0;
    for (std::size_t e = 0; e < kNumExpressions; ++e) {
      const auto& units = table.at(std::string(kExpressionNames[e]));
      if (units.count(kActionUnits[a]) != 0) acc += expr[e];
    }
    out[a] = acc;
  }
  return out;
}

inline double clamp_log(double p) { return std::log(std::max(p, 1e-12)); }

/// Per-row Σ −r′ log r, averaged over rows.
inline double oracle_dm(const Tensor& au, const Tensor& pseudo) {
  double total = 0.0;
  for (std::size_t r = 0; r < au.rows(); ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < au.cols(); ++c) row -= pseudo.at(r, c) * clamp_log(au.at(r, c));
    total += row;
  }
  return total / static_cast<double>(au.rows());
}

inline double oracle_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Direct-formula Pearson: Σ(x−x̄)(y−ȳ) / sqrt(Σ(x−x̄)² Σ(y−ȳ)²).
inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = oracle_mean(x), my = oracle_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double oracle_ccc(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = oracle_mean(x), my = oracle_mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double denom = sxx / n + syy / n + (mx - my) * (mx - my);
  return denom == 0.0 ? 0.0 : 2.0 * (sxy / n) / denom;
}

inline std::vector<double> column(const Tensor& t, std::size_t c) {
  std::vector<double> out(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) out[r] = t.at(r, c);
  return out;
}

/// F1 from confusion counts for one class of a single-label problem.
inline double oracle_f1(const std::vector<int>& preds, const std::vector<int>& labels, int cls) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == cls && labels[i] == cls) ++tp;
    if (preds[i] == cls && labels[i] != cls) ++fp;
    if (preds[i] != cls && labels[i] == cls) ++fn;
  }
  return tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One GRU layer, scalar loops over the update/reset/candidate/state
/// equations. Inputs t × d, result t × d′.
inline std::vector<std::vector<double>> oracle_gru(const Tensor& x, const TensorMap& p,
                                                   const std::string& prefix) {
  const Tensor& wz = p.at(prefix + ".W_z");
  const Tensor& wr = p.at(prefix + ".W_r");
  const Tensor& wh = p.at(prefix + ".W_h");
  const Tensor& uz = p.at(prefix + ".U_z");
  const Tensor& ur = p.at(prefix + ".U_r");
  const Tensor& uh = p.at(prefix + ".U_h");
  const Tensor& bz = p.at(prefix + ".b_z");
  const Tensor& br = p.at(prefix + ".b_r");
  const Tensor& bh = p.at(prefix + ".b_h");
  const std::size_t hidden = wz.rows();
  const std::size_t d = wz.cols();
  std::vector<double> h(hidden, 0.0);
  std::vector<std::vector<double>> states;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    std::vector<double> z(hidden), r(hidden), cand(hidden), next(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double az = bz[j], ar = br[j];
      for (std::size_t k = 0; k < d; ++k) {
        az += wz.at(j, k) * x.at(t, k);
        ar += wr.at(j, k) * x.at(t, k);
      }
      for (std::size_t k = 0; k < hidden; ++k) {
        az += uz.at(j, k) * h[k];
        ar += ur.at(j, k) * h[k];
      }
      z[j] = sigmoid(az);
      r[j] = sigmoid(ar);
    }
    for (std::size_t j = 0; j < hidden; ++j) {
      double ah = bh[j];
      for (std::size_t k = 0; k < d; ++k) ah += wh.at(j, k) * x.at(t, k);
      for (std::size_t k = 0; k < hidden; ++k) ah += uh.at(j, k) * (r[k] * h[k]);
      cand[j] = std::tanh(ah);
      next[j] = (1.0 - z[j]) * h[j] + z[j] * cand[j];
    }
    h = next;
    states.push_back(h);
  }
  return states;
}

}  // namespace feie::test
