#include <cmath>
#include <limits>

#include "doctest.h"
#include "fkan/numeric.hpp"
#include "support.hpp"

using namespace fkan;

TEST_CASE("logistic and silu") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(logistic(1000.0) == 1.0);
  CHECK(logistic(-1000.0) == 0.0);
  CHECK(logistic(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  CHECK(silu(0.0) == 0.0);
  for (double x : {-4.0, -0.3, 0.0, 0.7, 5.0}) {
    const double h = 1e-6;
    CHECK(silu_derivative(x) == doctest::Approx((silu(x + h) - silu(x - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("sigmoid clamps so outputs stay inside (0, 1)") {
  const Matrix p = sigmoid(Matrix::from_rows({{-1e6}, {0.0}, {1e6}}));
  CHECK(p(0, 0) > 0.0);
  CHECK(p(1, 0) == 0.5);
  CHECK(p(2, 0) < 1.0);
  CHECK(p(0, 0) == logistic(-36.0));
}

TEST_CASE("softmax rows sum to one and never underflow to zero") {
  const Matrix p = softmax_rows(Matrix::from_rows({{1.0, 2.0, 3.0}, {0.0, -5000.0, 0.0}}));
  CHECK(p(0, 0) + p(0, 1) + p(0, 2) == doctest::Approx(1.0));
  CHECK(p(0, 2) == doctest::Approx(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0))));
  CHECK(p(1, 1) > 0.0);
  CHECK(p(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("matmul shape errors name both shapes") {
  const Matrix a(2, 3), b(2, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
}

TEST_CASE("loss: analytic values") {
  SUBCASE("binary 0.5 gives ln 2") {
    const Matrix p = Matrix::from_rows({{0.5}, {0.5}});
    const Matrix t = Matrix::from_rows({{1.0}, {0.0}});
    CHECK(loss(p, t, Task::binary) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("uniform multiclass gives ln C") {
    const Matrix p(3, 4, 0.25);
    Matrix t(3, 4);
    t(0, 0) = t(1, 3) = t(2, 1) = 1.0;
    CHECK(loss(p, t, Task::multiclass) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  }
  SUBCASE("perfect predictions give zero, not -0") {
    const Matrix p = Matrix::from_rows({{1.0}, {0.0}});
    const double l = loss(p, p, Task::binary);
    CHECK(l == 0.0);
    CHECK_FALSE(std::signbit(l));
  }
  SUBCASE("log is clamped") {
    const Matrix p = Matrix::from_rows({{0.0}});
    const Matrix t = Matrix::from_rows({{1.0}});
    CHECK(loss(p, t, Task::binary) == doctest::Approx(-std::log(1e-12)));
  }
}

TEST_CASE("loss rejects bad input") {
  CHECK_THROWS_AS(loss(Matrix(2, 1), Matrix(3, 1), Task::binary), std::invalid_argument);
  CHECK_THROWS_AS(loss(Matrix(2, 2, 0.5), Matrix(2, 2), Task::binary), std::invalid_argument);
  CHECK_THROWS_AS(loss(Matrix(1, 1, 1.5), Matrix(1, 1), Task::binary), std::invalid_argument);
  CHECK_THROWS_AS(loss(Matrix(0, 1), Matrix(0, 1), Task::binary), std::invalid_argument);
}

TEST_CASE("adam matches a scalar recurrence") {
  // Scalar oracle written out for a two-entry ParamSet over 5 steps.
  ParamSet p;
  p.add("a", Matrix::from_rows({{0.3, -1.2}}));
  p.add("b", Matrix::from_rows({{2.0}}));
  AdamConfig cfg;
  cfg.lr = 0.01;
  AdamState state(p, cfg);
  std::vector<double> w = {0.3, -1.2, 2.0}, m(3, 0.0), v(3, 0.0);
  for (int step = 1; step <= 5; ++step) {
    ParamSet g = p.zeros_like();
    std::vector<double> grads = {0.1 * step, -0.5, w[2] - 1.0};
    g.tensor(0).data() = {grads[0], grads[1]};
    g.tensor(1).data() = {grads[2]};
    p = adam_step(state, p, g);
    for (int i = 0; i < 3; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grads[i];
      v[i] = 0.999 * v[i] + 0.001 * grads[i] * grads[i];
      const double mh = m[i] / (1 - std::pow(0.9, step));
      const double vh = v[i] / (1 - std::pow(0.999, step));
      w[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK(state.step_count() == 5);
  CHECK(p.flatten()[0] == doctest::Approx(w[0]).epsilon(1e-14));
  CHECK(p.flatten()[1] == doctest::Approx(w[1]).epsilon(1e-14));
  CHECK(p.flatten()[2] == doctest::Approx(w[2]).epsilon(1e-14));
}

TEST_CASE("adam: first step moves each weight by about lr against the gradient sign") {
  ParamSet p;
  p.add("w", Matrix::from_rows({{1.0, 1.0, 1.0}}));
  ParamSet g = p.zeros_like();
  g.tensor(0).data() = {3.0, -0.001, 0.0};
  AdamState state(p, AdamConfig{});
  const ParamSet next = adam_step(state, p, g);
  CHECK(next.tensor(0)(0, 0) == doctest::Approx(1.0 - 0.005).epsilon(1e-9));
  CHECK(next.tensor(0)(0, 1) == doctest::Approx(1.0 + 0.005).epsilon(1e-5));
  CHECK(next.tensor(0)(0, 2) == 1.0);
}

TEST_CASE("adam rejects non-finite gradients and mismatched shapes") {
  ParamSet p;
  p.add("w", Matrix(1, 2));
  AdamState state(p, AdamConfig{});
  ParamSet g = p.zeros_like();
  g.tensor(0)(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(state, p, g), std::invalid_argument);
  ParamSet other;
  other.add("w", Matrix(2, 1));
  CHECK_THROWS_AS(adam_step(state, p, other), std::invalid_argument);
}

TEST_CASE("finite differences of a quadratic are exact up to rounding") {
  Rng rng(5);
  const ParamSet p = testing::random_params(rng);
  const ParamSet grad = finite_diff_grad(
      [](const ParamSet& q) {
        double s = 0.0;
        for (double v : q.flatten()) s += 1.5 * v * v + v;
        return s;
      },
      p, 1e-5);
  const auto w = p.flatten();
  const auto g = grad.flatten();
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(g[i] == doctest::Approx(3.0 * w[i] + 1.0).epsilon(1e-7));
}

TEST_CASE("ParamSet flatten/unflatten round trip and congruence") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ParamSet p = testing::random_params(rng);
    CHECK(p.unflatten(p.flatten()) == p);
    CHECK(p.scalar_count() == p.flatten().size());
    CHECK(p.congruent(p.zeros_like()));
  }
  ParamSet a;
  a.add("x", Matrix(1, 2));
  CHECK_THROWS_AS(a.add("x", Matrix(1, 1)), std::invalid_argument);
  ParamSet b;
  b.add("y", Matrix(1, 2));
  CHECK_FALSE(a.congruent(b));
  CHECK_THROWS_WITH_AS(a.require_congruent(b, "ctx"), doctest::Contains("ctx"), std::invalid_argument);
  CHECK_THROWS_AS(a.unflatten(std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("matmul examples and oracle") {
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(matmul(Matrix::from_rows({{1, 0}, {0, 1}}), m) == m);
  CHECK(matmul(Matrix::from_rows({{1, 2}, {3, 4}}), Matrix::from_rows({{1}, {1}})) == Matrix::from_rows({{3}, {7}}));
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = testing::random_matrix(rng, 3, 4), b = testing::random_matrix(rng, 4, 2);
    const Matrix c = matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
        CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-15));
      }
  }
}

TEST_CASE("property: matmul associativity within 1e-9") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = testing::random_size(rng, 1, 6), n = testing::random_size(rng, 1, 6),
                      p = testing::random_size(rng, 1, 6), q = testing::random_size(rng, 1, 6);
    const Matrix a = testing::random_matrix(rng, m, n), b = testing::random_matrix(rng, n, p),
                 c = testing::random_matrix(rng, p, q);
    const Matrix left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    double scale = 0.0;
    for (double v : left.data()) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < left.size(); ++i)
      CHECK(std::abs(left.data()[i] - right.data()[i]) <= 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("activation examples") {
  CHECK(sigmoid(Matrix(1, 1))(0, 0) == 0.5);
  const Matrix s = softmax_rows(Matrix(1, 3));
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(relu(Matrix::from_rows({{-1, 2}})) == Matrix::from_rows({{0, 2}}));
  CHECK(std::isnan(relu(Matrix::from_rows({{std::nan("")}}))(0, 0)));
  CHECK(silu(Matrix::from_rows({{0.0}}))(0, 0) == 0.0);
}

TEST_CASE("property: softmax rows sum to one within 1e-12 for any finite input") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix x = testing::random_matrix(rng, 3, testing::random_size(rng, 1, 8), trial % 2 ? 1.0 : 300.0);
    const Matrix p = softmax_rows(x);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double sum = 0.0;
      for (double v : p.row(r)) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("property: loss is non-negative and matches direct summation") {
  Rng rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = testing::random_size(rng, 1, 10), c = testing::random_size(rng, 2, 5);
    const Matrix p = softmax_rows(testing::random_matrix(rng, n, c, 2.0));
    Matrix t(n, c);
    double oracle = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t y = rng.index(c);
      t(i, y) = 1.0;
      oracle -= std::log(p(i, y));
    }
    const double l = loss(p, t, Task::multiclass);
    CHECK(l >= 0.0);
    CHECK(l == doctest::Approx(oracle / static_cast<double>(n)).epsilon(1e-13));
  }
}

TEST_CASE("adam: zero gradient leaves params bit-identical and decays moments") {
  Rng rng(25);
  const ParamSet p = testing::random_params(rng);
  AdamState state(p, AdamConfig{});
  CHECK(adam_step(state, p, p.zeros_like()) == p);
  ParamSet g = p.zeros_like();
  for (double& v : g.tensor(0).data()) v = 1.0;
  const ParamSet moved = adam_step(state, p, g);
  const double m_before = state.first_moment().tensor(0).data()[0];
  adam_step(state, moved, moved.zeros_like());
  CHECK(std::abs(state.first_moment().tensor(0).data()[0]) < std::abs(m_before));
}

TEST_CASE("adam: unit gradients move every weight by lr on the first step") {
  Rng rng(26);
  const ParamSet p = testing::random_params(rng);
  ParamSet g = p.zeros_like();
  for (std::size_t e = 0; e < g.entry_count(); ++e)
    for (double& v : g.tensor(e).data()) v = 1.0;
  AdamState state(p, AdamConfig{});
  const auto before = p.flatten(), after = adam_step(state, p, g).flatten();
  for (std::size_t i = 0; i < before.size(); ++i)
    CHECK(before[i] - after[i] == doctest::Approx(0.005 / (1.0 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("adam: 10 steps on w^2 match the scalar recurrence") {
  ParamSet p;
  p.add("w", Matrix(1, 1, 1.0));
  AdamState state(p, AdamConfig{});
  double w = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 10; ++t) {
    ParamSet g = p.zeros_like();
    g.tensor(0)(0, 0) = 2.0 * p.tensor(0)(0, 0);
    p = adam_step(state, p, g);
    const double gw = 2.0 * w;
    m = 0.9 * m + 0.1 * gw;
    v = 0.999 * v + 0.001 * gw * gw;
    w -= 0.005 * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);
    CHECK(p.tensor(0)(0, 0) == doctest::Approx(w).epsilon(1e-15));
  }
}

TEST_CASE("finite differences: examples") {
  ParamSet p;
  p.add("w", Matrix::from_rows({{1.0, 2.0}}));
  const ParamSet g = finite_diff_grad(
      [](const ParamSet& q) {
        double s = 0.0;
        for (double v : q.flatten()) s += v * v;
        return s;
      },
      p, 1e-5);
  CHECK(std::abs(g.tensor(0)(0, 0) - 2.0) < 1e-6);
  CHECK(std::abs(g.tensor(0)(0, 1) - 4.0) < 1e-6);
  const ParamSet z = finite_diff_grad([](const ParamSet&) { return 3.0; }, p, 1e-5);
  for (double v : z.flatten()) CHECK(std::abs(v) < 1e-9);
  CHECK_THROWS_AS(finite_diff_grad([](const ParamSet&) { return std::nan(""); }, p, 1e-5), std::runtime_error);
  CHECK_THROWS_AS(finite_diff_grad([](const ParamSet&) { return 0.0; }, p, 0.0), std::invalid_argument);
}
