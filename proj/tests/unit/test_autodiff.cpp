#include <doctest.h>

#include <cmath>
#include <random>

#include "feie/autodiff/adam.hpp"
#include "feie/autodiff/grad_check.hpp"
#include "feie/autodiff/graph.hpp"
#include "feie/error.hpp"
#include "support.hpp"

using namespace feie;
using namespace feie::autodiff;

TEST_CASE("evaluate: elementary ops") {
  Graph g;
  const Var x = g.parameter("x");

  SUBCASE("sigmoid at zero") {
    const Tensor& y = g.evaluate(g.sigmoid(x), {{"x", Tensor::scalar(0.0)}});
    CHECK(y.item() == 0.5);
  }
  SUBCASE("softmax of a constant row is uniform") {
    const Tensor& y = g.evaluate(g.softmax(x), {{"x", Tensor::matrix(1, 3, {2.5, 2.5, 2.5})}});
    for (double v : y.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("identity matmul") {
    const Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    const Var y = g.matmul(g.constant(eye), x);
    const Tensor& out = g.evaluate(y, {{"x", Tensor::matrix(3, 1, {1, 2, 3})}});
    CHECK(out.data() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("log is floored") {
    const Tensor& y = g.evaluate(g.log(x), {{"x", Tensor::scalar(0.0)}});
    CHECK(y.item() == doctest::Approx(std::log(1e-12)));
  }
}

TEST_CASE("evaluate: shape and binding errors") {
  Graph g;
  const Var a = g.parameter("a");
  const Var b = g.parameter("b");
  CHECK_THROWS_AS(g.evaluate(g.matmul(a, b), {{"a", Tensor({2, 3})}, {"b", Tensor({2, 3})}}),
                  ShapeError);
  CHECK_THROWS_AS(g.evaluate(a + b, {{"a", Tensor({2, 3})}}), ShapeError);
}

TEST_CASE("evaluate is deterministic") {
  std::mt19937_64 rng(3);
  const Tensor x = test::random_tensor({5, 4}, rng);
  const Tensor w = test::random_tensor({4, 3}, rng);
  auto run = [&] {
    Graph g;
    const Var y = g.softmax(g.tanh(g.matmul(g.parameter("x"), g.parameter("w"))));
    return g.evaluate(g.sum(g.log(y)), {{"x", x}, {"w", w}});
  };
  CHECK(run() == run());
}

TEST_CASE("backward: textbook gradients") {
  Graph g;
  const Var x = g.parameter("x");

  SUBCASE("power rule") {
    g.evaluate(x * x, {{"x", Tensor::scalar(3.0)}});
    CHECK(g.backward().at("x").item() == 6.0);
  }
  SUBCASE("sigmoid slope at zero") {
    g.evaluate(g.sigmoid(x), {{"x", Tensor::scalar(0.0)}});
    CHECK(g.backward().at("x").item() == 0.25);
  }
  SUBCASE("masked coordinate") {
    g.evaluate(g.sum(g.mask(x, Tensor::vector({1.0, 0.0}))), {{"x", Tensor::vector({4.0, 5.0})}});
    CHECK(g.backward().at("x").data() == std::vector<double>{1.0, 0.0});
  }
}

TEST_CASE("backward: unused parameter gets an exactly-zero array") {
  Graph g;
  const Var x = g.parameter("x");
  g.parameter("unused");
  g.evaluate(g.sum(g.tanh(x)), {{"x", Tensor::vector({0.1, 0.2})},
                                {"unused", Tensor::matrix(2, 2, {1, 2, 3, 4})}});
  const auto grads = g.backward();
  REQUIRE(grads.count("unused") == 1);
  CHECK(grads.at("unused") == Tensor({2, 2}, 0.0));
}

TEST_CASE("grad_check: reference cases") {
  SUBCASE("quadratic") {
    Graph g;
    const Var x = g.parameter("x");
    const auto report = grad_check(g, x * x, {{"x", Tensor::scalar(3.0)}}, 1e-6, 100, 0);
    CHECK(report.max_rel_error() < 1e-8);
    CHECK_FALSE(report.truncation_warning);
  }
  SUBCASE("sigmoid") {
    Graph g;
    const Var x = g.parameter("x");
    const auto report = grad_check(g, g.sigmoid(x), {{"x", Tensor::scalar(0.0)}}, 1e-6, 100, 0);
    CHECK(report.max_rel_error() < 1e-7);
  }
  SUBCASE("two-layer softmax cross-entropy, seed 7") {
    std::mt19937_64 rng(7);
    const Tensor x = test::random_tensor({6, 5}, rng);
    Tensor onehot({6, 3}, 0.0);
    for (std::size_t r = 0; r < 6; ++r) onehot.at(r, r % 3) = 1.0;
    const Bindings params = {{"W1", test::random_tensor({5, 8}, rng)},
                             {"b1", test::random_tensor({8}, rng)},
                             {"W2", test::random_tensor({8, 3}, rng)},
                             {"b2", test::random_tensor({3}, rng)}};
    Graph g;
    const Var h = g.tanh(g.matmul(g.constant(x), g.parameter("W1")) + g.parameter("b1"));
    const Var p = g.softmax(g.matmul(h, g.parameter("W2")) + g.parameter("b2"));
    const Var loss = g.scale(g.mean(g.mask(g.log(p), onehot)), -3.0);
    const auto report = grad_check(g, loss, params, 1e-6, 100, 7);
    CHECK(report.max_rel_error() < 1e-4);
    CHECK(report.coords_checked() == 40 + 8 + 24 + 3);
  }
  SUBCASE("large step raises the truncation warning") {
    Graph g;
    const Var x = g.parameter("x");
    const auto report = grad_check(g, g.tanh(x), {{"x", Tensor::scalar(0.7)}}, 1e-2, 1, 0);
    CHECK(report.truncation_warning);
  }
}

TEST_CASE("grad_check catches a corrupted backward rule") {
  Graph g;
  const Var x = g.parameter("x");
  const Var root = g.sum(g.tanh(x));
  const Bindings b = {{"x", Tensor::vector({0.3, -0.4, 0.9})}};
  inject_backward_fault(Op::kTanh);
  const auto broken = grad_check(g, root, b, 1e-6, 100, 0);
  inject_backward_fault(std::nullopt);
  const auto fixed = grad_check(g, root, b, 1e-6, 100, 0);
  CHECK_FALSE(broken.passed(1e-4));
  CHECK(fixed.passed(1e-4));
}

TEST_CASE("grad_check: every primitive") {
  std::mt19937_64 rng(11);
  const Bindings b = {{"a", test::random_tensor({3, 4}, rng, 0.2, 1.0)},
                      {"c", test::random_tensor({3, 4}, rng, 0.2, 1.0)},
                      {"w", test::random_tensor({4, 2}, rng)},
                      {"v", test::random_tensor({1, 4}, rng)}};
  Graph g;
  const Var a = g.parameter("a"), c = g.parameter("c"), w = g.parameter("w"),
            v = g.parameter("v");
  const Var t1 = g.sum(g.div(a, c) + g.sub(a, v) * g.sigmoid(c));
  const Var t2 = g.sum(g.log(g.softmax(g.matmul(a, w))));
  const Var t3 = g.sum(g.sqrt(g.variance(a) + g.covariance(a, c) + g.constant(1.0)));
  const Var t4 = g.mean(g.concat({g.select_rows(a, {2, 0}), g.select_rows(c, {1, 1})}), Axis::kAll);
  const Var t5 = g.sum(g.matmul(a, c, true)) + g.sum(g.mean(g.scale(c, 0.5), Axis::kRows));
  const Var root = t1 + t2 + t3 + g.tanh(t4) + g.scale(t5, 0.1);
  const auto report = grad_check(g, root, b, 1e-6, 100, 0);
  CHECK(report.max_rel_error() < 1e-6);
}

TEST_CASE("div_or_zero defines x / 0 as 0") {
  Graph g;
  const Var a = g.parameter("a"), b = g.parameter("b");
  const Var q = g.div_or_zero(a, b);
  g.evaluate(g.sum(q), {{"a", Tensor::vector({1.0, 6.0})}, {"b", Tensor::vector({0.0, 2.0})}});
  CHECK(g.value(q).data() == std::vector<double>{0.0, 3.0});
  const auto grads = g.backward();
  CHECK(grads.at("a")[0] == 0.0);
  CHECK(grads.at("b")[0] == 0.0);
}

TEST_CASE("adam") {
  TensorMap params = {{"p", Tensor::vector({1.0, -2.0})}};
  const TensorMap grads = {{"p", Tensor::vector({0.5, 0.25})}};

  SUBCASE("zero learning rate leaves parameters unchanged") {
    AdamState state;
    const TensorMap before = params;
    adam_update(params, grads, state, 0.0);
    CHECK(params == before);
    CHECK(state.step == 1);
  }
  SUBCASE("first step moves every coordinate by lr against the gradient sign") {
    AdamState state;
    adam_update(params, grads, state, 0.1);
    CHECK(params.at("p")[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(params.at("p")[1] == doctest::Approx(-2.1).epsilon(1e-6));
  }
  SUBCASE("identical calls give identical parameters") {
    TensorMap other = params;
    AdamState s1, s2;
    adam_update(params, grads, s1, 0.01);
    adam_update(other, grads, s2, 0.01);
    CHECK(params == other);
  }
}
