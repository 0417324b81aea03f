#include <doctest.h>

#include <cmath>

#include "star/optimizer.hpp"
#include "star/tensor.hpp"

using namespace star;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

double weighted_sum(const Tensor& y, const Tensor& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * c[i];
  return s;
}

// Checks a unary primitive: loss = <c, f(x)>, analytic grad from `backward`.
template <typename F, typename B>
double check_unary(Shape shape, F f, B backward, double scale = 1.0) {
  Rng rng(42);
  ParameterStore store;
  auto& x = store.add("x", random_tensor(rng, shape, scale));
  const Tensor c = random_tensor(rng, f(x.value).shape());
  x.grad = backward(x.value, f(x.value), c);
  auto loss = [&] { return weighted_sum(f(store.get("x").value), c); };
  const auto r = finite_difference_check(store, loss);
  return r.max_relative_error;
}

}  // namespace

TEST_SUITE("numeric") {

TEST_CASE("analytic values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(star::tanh(Tensor::vector({0.0}))[0] == 0.0);
  const auto s = softmax(Tensor::vector({0.0, 0.0}));
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
}

TEST_CASE("softmax is a stable probability vector") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(30);
    const double scale = trial % 2 == 0 ? 5.0 : 1e4;
    const auto x = random_tensor(rng, {n}, scale);
    const auto y = softmax(x);
    double sum = 0.0;
    for (double v : y.data()) {
      REQUIRE(v >= 0.0);
      REQUIRE(std::isfinite(v));
      sum += v;
    }
    REQUIRE(std::abs(sum - 1.0) <= 1e-6);
  }
  const auto big = softmax(Tensor::vector({1000.0, 1000.0, -1000.0}));
  CHECK(big[0] == doctest::Approx(0.5));
  const auto rows = softmax(Tensor::matrix(2, 2, {0, 0, 1e6, 0}));
  CHECK(rows.at(0, 0) == 0.5);
  CHECK(rows.at(1, 0) == 1.0);
}

TEST_CASE("matmul equals a triple-loop oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_tensor(rng, {4, 3});
    const auto b = random_tensor(rng, {3, 2});
    const auto c = matmul(a, b);
    REQUIRE(c.shape() == Shape{4, 2});
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += a.at(i, k) * b.at(k, j);
        REQUIRE(std::abs(c.at(i, j) - s) <= 1e-12);
      }
  }
}

TEST_CASE("span kernels agree with matmul") {
  Rng rng(3);
  const auto w = random_tensor(rng, {5, 3});
  const auto x = random_tensor(rng, {1, 5});
  std::vector<double> out(3);
  vec_mat(x.data(), w, out);
  const auto ref = matmul(x, w);
  for (std::size_t j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(ref[j]).epsilon(1e-14));
  vec_mat_acc(x.data(), w, out);
  for (std::size_t j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(2 * ref[j]).epsilon(1e-14));
  const auto g = random_tensor(rng, {1, 3});
  std::vector<double> dx(5, 0.0);
  vec_mat_backward_input(g.data(), w, dx);
  const auto grads = matmul_backward(x, w, g);
  for (std::size_t i = 0; i < 5; ++i) CHECK(dx[i] == doctest::Approx(grads.da[i]).epsilon(1e-14));
  Tensor dw({5, 3});
  outer_acc(x.data(), g.data(), dw);
  for (std::size_t i = 0; i < dw.size(); ++i) CHECK(dw[i] == doctest::Approx(grads.db[i]).epsilon(1e-14));
}

TEST_CASE("shape errors name the op and both shapes") {
  CHECK_THROWS_WITH_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), doctest::Contains("matmul"), ShapeError);
  CHECK_THROWS_WITH_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), doctest::Contains("[2x3]"), ShapeError);
  CHECK_THROWS_AS(elementwise_mul(Tensor({2}), Tensor({3})), ShapeError);
  CHECK_THROWS_AS(add_bias(Tensor({2, 3}), Tensor({2})), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("every primitive backward passes the finite-difference check") {
  const double tol = 1e-4;
  CHECK(check_unary({3, 4}, [](const Tensor& x) { return sigmoid(x); },
                    [](const Tensor&, const Tensor& y, const Tensor& g) { return sigmoid_backward(y, g); }) <= tol);
  CHECK(check_unary({3, 4}, [](const Tensor& x) { return star::tanh(x); },
                    [](const Tensor&, const Tensor& y, const Tensor& g) { return tanh_backward(y, g); }) <= tol);
  CHECK(check_unary({2, 5}, [](const Tensor& x) { return softmax(x); },
                    [](const Tensor&, const Tensor& y, const Tensor& g) { return softmax_backward(y, g); }, 3.0) <= tol);

  Rng rng(4);
  const auto b = random_tensor(rng, {4, 2});
  CHECK(check_unary({3, 4}, [&](const Tensor& x) { return matmul(x, b); },
                    [&](const Tensor& x, const Tensor&, const Tensor& g) { return matmul_backward(x, b, g).da; }) <= tol);
  const auto a = random_tensor(rng, {2, 3});
  CHECK(check_unary({3, 4}, [&](const Tensor& x) { return matmul(a, x); },
                    [&](const Tensor& x, const Tensor&, const Tensor& g) { return matmul_backward(a, x, g).db; }) <= tol);

  const auto xb = random_tensor(rng, {3, 4});
  CHECK(check_unary({4}, [&](const Tensor& bias) { return add_bias(xb, bias); },
                    [](const Tensor&, const Tensor&, const Tensor& g) { return add_bias_backward(g); }) <= tol);
  const auto other = random_tensor(rng, {3, 4});
  CHECK(check_unary({3, 4}, [&](const Tensor& x) { return elementwise_mul(x, other); },
                    [&](const Tensor&, const Tensor&, const Tensor& g) { return elementwise_mul(other, g); }) <= tol);

  const auto tail = random_tensor(rng, {2});
  CHECK(check_unary({3},
                    [&](const Tensor& x) {
                      std::vector<Tensor> parts{x, tail};
                      return concat(parts);
                    },
                    [&](const Tensor& x, const Tensor&, const Tensor& g) {
                      std::vector<Tensor> parts{x, tail};
                      return concat_backward(parts, g)[0];
                    }) <= tol);
  const auto partner = random_tensor(rng, {4});
  CHECK(check_unary({4},
                    [&](const Tensor& x) {
                      std::vector<Tensor> parts{x, partner};
                      return mean(parts);
                    },
                    [](const Tensor&, const Tensor&, const Tensor& g) { return mean_backward(2, g); }) <= tol);

  Rng drop_rng(5);
  Tensor mask;
  dropout(Tensor({3, 4}, 1.0), 0.5, true, drop_rng, &mask);
  CHECK(check_unary({3, 4}, [&](const Tensor& x) { return elementwise_mul(x, mask); },
                    [&](const Tensor&, const Tensor&, const Tensor& g) { return dropout_backward(mask, g); }) <= tol);
}

TEST_CASE("concat and mean forward") {
  std::vector<Tensor> parts{Tensor::vector({1, 2}), Tensor::vector({3})};
  CHECK(concat(parts) == Tensor::vector({1, 2, 3}));
  std::vector<Tensor> pair{Tensor::vector({1, 4}), Tensor::vector({3, 0})};
  CHECK(mean(pair) == Tensor::vector({2, 2}));
}

TEST_CASE("dropout: identity at rate 0 and in eval mode, inverted scaling in train mode") {
  Rng rng(6);
  const auto x = random_tensor(rng, {50, 20});
  Rng r1(1);
  CHECK(dropout(x, 0.0, true, r1) == x);
  CHECK(dropout(x, 0.7, false, r1) == x);
  Tensor mask;
  const auto y = dropout(x, 0.25, true, r1, &mask);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask[i] == 0.0) {
      ++dropped;
      CHECK(y[i] == 0.0);
    } else {
      CHECK(mask[i] == doctest::Approx(1.0 / 0.75));
      CHECK(y[i] == doctest::Approx(x[i] / 0.75));
    }
  }
  CHECK(dropped > 150);
  CHECK(dropped < 350);
  CHECK_THROWS(dropout(x, 1.0, true, r1));
}

TEST_CASE("adam: zero grad and zero L2 leaves the value") {
  Parameter p;
  p.name = "w";
  p.value = Tensor::vector({0.3, -1.2});
  p.grad = Tensor({2});
  p.adam_m = Tensor({2});
  p.adam_v = Tensor({2});
  AdamOptions o;
  o.l2 = 0.0;
  adam_step(p, o);
  CHECK(p.value == Tensor::vector({0.3, -1.2}));
}

TEST_CASE("adam: first step with grad 1 moves by lr") {
  Parameter p;
  p.name = "w";
  p.value = Tensor::vector({0.5});
  p.grad = Tensor::vector({1.0});
  p.adam_m = Tensor({1});
  p.adam_v = Tensor({1});
  AdamOptions o;
  o.l2 = 0.0;
  adam_step(p, o);
  // m_hat = v_hat = 1 -> step = lr / (1 + eps)
  CHECK(p.value[0] == doctest::Approx(0.5 - 0.001 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(p.step == 1);
}

TEST_CASE("adam: hand-computed two steps with L2") {
  Parameter p;
  p.name = "w";
  p.value = Tensor::vector({2.0});
  p.grad = Tensor::vector({0.5});
  p.adam_m = Tensor({1});
  p.adam_v = Tensor({1});
  AdamOptions o;
  o.lr = 0.01;
  o.l2 = 0.1;
  double w = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    const double g = 0.5 + 0.1 * w;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    w -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    adam_step(p, o);
  }
  CHECK(p.value[0] == doctest::Approx(w).epsilon(1e-14));
}

TEST_CASE("adam: lr 0 leaves values, non-finite grads abort untouched") {
  Rng rng(7);
  ParameterStore store;
  store.add("a", random_tensor(rng, {3, 3}));
  store.add("b", random_tensor(rng, {4}));
  for (auto& [n, p] : store) p.grad = random_tensor(rng, p.value.shape());
  const auto before_a = store.get("a").value;
  AdamOptions o;
  o.lr = 0.0;
  adam_step(store, o);
  CHECK(store.get("a").value == before_a);

  store.get("b").grad[2] = std::nan("");
  o.lr = 0.1;
  const auto snapshot = store.get("a").value;
  CHECK_THROWS_WITH_AS(adam_step(store, o), doctest::Contains("'b'"), NumericError);
  CHECK(store.get("a").value == snapshot);
}

TEST_CASE("adam: deterministic") {
  auto run = [] {
    Rng rng(8);
    ParameterStore store;
    store.add("w", random_tensor(rng, {5, 5}));
    AdamOptions o;
    for (int step = 0; step < 20; ++step) {
      for (auto& [n, p] : store) p.grad = random_tensor(rng, p.value.shape());
      adam_step(store, o);
    }
    return store.get("w").value;
  };
  CHECK(run() == run());
}

TEST_CASE("round_to_precision keeps float-representable values") {
  Tensor t = Tensor::vector({0.1, 1.0 / 3.0});
  round_to_precision(t, Precision::kF32);
  CHECK(t[0] == double(0.1f));
  Tensor u = t;
  round_to_precision(u, Precision::kF32);
  CHECK(u == t);
  Tensor d = Tensor::vector({0.1});
  round_to_precision(d, Precision::kF64);
  CHECK(d[0] == 0.1);
}

TEST_CASE("finite differences: sum of parameters") {
  Rng rng(9);
  ParameterStore store;
  store.add("a", random_tensor(rng, {4, 3}));
  store.add("b", random_tensor(rng, {300}));
  for (auto& [n, p] : store) p.grad.fill(1.0);
  auto loss = [&] {
    double s = 0.0;
    for (const auto& [n, p] : store)
      for (double v : p.value.data()) s += v;
    return s;
  };
  const auto r = finite_difference_check(store, loss);
  CHECK(r.max_relative_error < 1e-8);
  CHECK(r.coordinates_checked == 12 + 200);
}

TEST_CASE("finite differences: sigmoid of one weight") {
  ParameterStore store;
  auto& w = store.add("w", Tensor::vector({0.7}));
  const double s = sigmoid(0.7);
  w.grad[0] = s * (1.0 - s);
  const auto r = finite_difference_check(store, [&] { return sigmoid(store.get("w").value[0]); });
  CHECK(r.max_relative_error < 1e-8);
}

TEST_CASE("finite differences: a wrong gradient is reported by name and index") {
  ParameterStore store;
  auto& w = store.add("w", Tensor::vector({0.2, 0.4, 0.6}));
  w.grad = Tensor::vector({0.4, 0.8, 0.0});  // d/dx x^2 is wrong at index 2
  const auto r = finite_difference_check(store, [&] {
    double s = 0.0;
    for (double v : store.get("w").value.data()) s += v * v;
    return s;
  });
  CHECK(r.worst_parameter == "w");
  CHECK(r.worst_index == 2);
  CHECK_THROWS_WITH_AS(require_gradients_match(r, 1e-4), doctest::Contains("w"), NumericError);
}

}  // TEST_SUITE
