#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "feie/error.hpp"
#include "feie/metrics/metrics.hpp"
#include "feie/metrics/report.hpp"
#include "support.hpp"

using namespace feie;
using namespace feie::metrics;

TEST_CASE("pearson") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(pearson(x, std::vector<double>{2, 4, 6}).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(x, std::vector<double>{3, 2, 1}).value == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}).value ==
        doctest::Approx(0.8).epsilon(1e-15));
  const Correlation flat = pearson(x, std::vector<double>{5, 5, 5});
  CHECK(flat.value == 0.0);
  CHECK(flat.degenerate);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), Error);
}

TEST_CASE("ccc") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(ccc(x, x).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ccc(x, std::vector<double>{2, 3, 4}).value == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(ccc(x, std::vector<double>{2, 2, 2}).value == 0.0);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = test::random_tensor({30}, rng), b = test::random_tensor({30}, rng, -0.5, 2.0);
    const auto va = a.data(), vb = b.data();
    CHECK(ccc(va, vb).value == doctest::Approx(ccc(vb, va).value).epsilon(1e-14));
    CHECK(std::abs(ccc(va, vb).value) <= std::abs(pearson(va, vb).value) + 1e-15);
  }
}

TEST_CASE("correlations against direct-formula oracles") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len(2, 1000);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = len(rng);
    const auto x = test::random_tensor({n}, rng).data();
    auto y = test::random_tensor({n}, rng, -3.0, 1.0).data();
    for (std::size_t i = 0; i < n; ++i) y[i] += 0.7 * x[i];
    CHECK(std::abs(pearson(x, y).value - test::oracle_pearson(x, y)) <= 1e-10);
    CHECK(std::abs(ccc(x, y).value - test::oracle_ccc(x, y)) <= 1e-10);

    // Reordering the pairs together changes nothing.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> px(n), py(n);
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = x[perm[i]];
      py[i] = y[perm[i]];
    }
    CHECK(std::abs(pearson(px, py).value - pearson(x, y).value) <= 1e-12);
    CHECK(std::abs(ccc(px, py).value - ccc(x, y).value) <= 1e-12);
  }
}

TEST_CASE("macro F1") {
  SUBCASE("perfect") {
    const std::vector<int> y = {0, 1, 2, 3, 4, 5, 6};
    CHECK(macro_f1(y, y, 7).macro == 1.0);
  }
  SUBCASE("everything predicted as one class") {
    const std::vector<int> y = {0, 1, 2, 3, 4, 5, 6};
    const std::vector<int> p(7, 2);
    const F1Scores s = macro_f1(p, y, 7);
    CHECK(s.f1[2] == doctest::Approx(0.25));
    CHECK(s.precision[2] == doctest::Approx(1.0 / 7.0));
    CHECK(s.recall[2] == 1.0);
    CHECK(s.macro == doctest::Approx(1.0 / 28.0).epsilon(1e-15));
  }
  SUBCASE("absent class is zero and flagged") {
    const std::vector<int> y = {0, 1, 1, 0};
    const F1Scores s = macro_f1(y, y, 3);
    CHECK(s.absent[2]);
    CHECK(s.f1[2] == 0.0);
    CHECK_FALSE(s.absent[0]);
  }
  SUBCASE("against a confusion-count oracle") {
    std::mt19937_64 rng(14);
    std::uniform_int_distribution<int> cls(0, 6);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<int> p(200), y(200);
      for (int& v : p) v = cls(rng);
      for (int& v : y) v = cls(rng);
      const F1Scores s = macro_f1(p, y, 7);
      double macro = 0.0;
      for (int c = 0; c < 7; ++c) {
        const double f1 = test::oracle_f1(p, y, c);
        CHECK(std::abs(s.f1[static_cast<std::size_t>(c)] - f1) <= 1e-10);
        macro += f1 / 7.0;
      }
      CHECK(std::abs(s.macro - macro) <= 1e-10);
    }
  }
  SUBCASE("multi-label is per-column binary F1") {
    std::mt19937_64 rng(15);
    std::bernoulli_distribution bit(0.4);
    std::vector<std::vector<int>> p(100, std::vector<int>(17)), y = p;
    for (auto& r : p) for (int& v : r) v = bit(rng);
    for (auto& r : y) for (int& v : r) v = bit(rng);
    const F1Scores s = macro_f1_multilabel(p, y);
    for (std::size_t a = 0; a < 17; ++a) {
      std::vector<int> pc, yc;
      for (std::size_t i = 0; i < 100; ++i) {
        pc.push_back(p[i][a]);
        yc.push_back(y[i][a]);
      }
      CHECK(std::abs(s.f1[a] - test::oracle_f1(pc, yc, 1)) <= 1e-10);
    }
  }
}

TEST_CASE("evaluation reports") {
  std::mt19937_64 rng(16);

  SUBCASE("perfect intensity predictions") {
    const Tensor y = test::random_tensor({10, 7}, rng, 0.0, 1.0);
    const EvalReport r = evaluate(y, y, TaskKind::kIntensity);
    CHECK(r.mean_pearson == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(percent(r.headline()) == "100.00");
    CHECK(r.pearson.size() == 7);
    CHECK(r.pearson[0].name == "Adoration");
  }
  SUBCASE("perfect valence-arousal predictions") {
    const Tensor y = test::random_tensor({10, 2}, rng);
    const EvalReport r = evaluate(y, y, TaskKind::kValenceArousal);
    CHECK(r.mean_ccc == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("expression labels as indices or one-hot rows") {
    Tensor probs = test::random_tensor({20, 7}, rng, 0.0, 1.0);
    Tensor idx({20, 1}), onehot({20, 7}, 0.0);
    for (std::size_t r = 0; r < 20; ++r) {
      idx[r] = static_cast<double>(r % 7);
      onehot.at(r, r % 7) = 1.0;
    }
    CHECK(evaluate(probs, idx, TaskKind::kExpression).macro_f1 ==
          evaluate(probs, onehot, TaskKind::kExpression).macro_f1);
  }
  SUBCASE("golden report") {
    std::mt19937_64 fixture(42);
    const Tensor y = test::random_tensor({12, 7}, fixture, 0.0, 1.0);
    Tensor p = test::random_tensor({12, 7}, fixture, 0.0, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += y[i];
    const EvalReport r = evaluate(p, y, TaskKind::kIntensity);
    CHECK(test::matches_golden("report_intensity_seed42", to_json(r)));
    const std::string csv = to_csv(r);
    CHECK(csv.find("metric,class,value,percent,flag") != std::string::npos);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(evaluate(Tensor({3, 7}), Tensor({4, 7}), TaskKind::kIntensity), ShapeError);
  }
}
