#include "oracles.hpp"
#include "photogeo/gradcheck.hpp"
#include "photogeo/ops.hpp"
#include "photogeo/optim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace photogeo;
using T = Tensor<double>;

TEST_CASE("sum of squares has gradient 2x") {
  auto x = T::from_vector({2}, {1, 2}, true);
  backward(sum(square(x)));
  CHECK(x.grad()[0] == 2);
  CHECK(x.grad()[1] == 4);
}

TEST_CASE("constant function leaves no gradient") {
  auto x = T::from_vector({2}, {1, 2}, true);
  auto c = T::scalar(3.0);
  backward(c + 0.0);
  CHECK((!x.has_grad() || x.grad().isZero(0)));
}

TEST_CASE("leaf gradients accumulate across backward calls") {
  auto x = T::from_vector({3}, {1, -2, 3}, true);
  backward(sum(x * 2.0));
  backward(sum(x * 2.0));
  for (Index i = 0; i < 3; ++i) CHECK(x.grad()[i] == 4);
  x.clear_grad();
  CHECK(!x.has_grad());
}

TEST_CASE("shared subexpressions sum their contributions") {
  auto x = T::from_vector({1}, {3}, true);
  auto y = mul(x, x);
  backward(sum(add(y, y)));
  CHECK(x.grad()[0] == doctest::Approx(12));
}

TEST_CASE("elementwise ops reject mismatched shapes") {
  CHECK_THROWS_AS(add(T::zeros({2, 3}), T::zeros({3, 2})), std::invalid_argument);
}

TEST_CASE("hflip is an involution and reverses rows") {
  auto x = T::from_vector({1, 1, 1, 3}, {1, 2, 3});
  const auto y = hflip(x);
  CHECK(y[0] == 3);
  CHECK(y[1] == 2);
  CHECK(y[2] == 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  Array<double> r(2 * 3 * 5 * 7);
  for (auto& v : r) v = u(rng);
  auto z = T::from_array({2, 3, 5, 7}, r);
  CHECK((hflip(hflip(z)).value() == z.value()).all());
  auto sym = T::from_vector({1, 1, 1, 4}, {1, 5, 5, 1});
  CHECK((hflip(sym).value() == sym.value()).all());
}

TEST_CASE("hflip_samples only touches flagged entries") {
  auto x = T::from_vector({2, 1, 1, 2}, {1, 2, 3, 4});
  const auto y = hflip_samples(x, {false, true});
  CHECK(y[0] == 1);
  CHECK(y[1] == 2);
  CHECK(y[2] == 4);
  CHECK(y[3] == 3);
}

TEST_CASE("crop_center takes the middle window") {
  Array<double> v(16);
  for (Index i = 0; i < 16; ++i) v[i] = double(i);
  const auto c = crop_center(T::from_array({1, 1, 4, 4}, v), 2, 2);
  CHECK(c[0] == 5);
  CHECK(c[1] == 6);
  CHECK(c[2] == 9);
  CHECK(c[3] == 10);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  auto rnd = [&](Shape s) {
    Array<double> a(shape_size(s));
    for (auto& v : a) v = n(rng);
    return T::from_array(s, a);
  };
  const auto x = rnd({1, 2, 8, 8}), w = rnd({3, 2, 4, 4}), y = rnd({1, 3, 4, 4});
  const auto zero3 = T::zeros({3}), zero2 = T::zeros({2});
  const double lhs = (conv2d(x, w, zero3, 2, 1).value() * y.value()).sum();
  const double rhs = (conv_transpose2d(y, w, zero2, 2, 1).value() * x.value()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv2d matches direct summation") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  for (const auto [k, stride, pad] : {std::array<Index, 3>{4, 2, 1}, {5, 1, 2}, {3, 2, 0}, {2, 1, 0}}) {
    const Index C = 2, H = 7, W = 6, O = 3;
    Array<double> xv(C * H * W), wv(O * C * k * k), bv(O);
    for (auto& v : xv) v = n(rng);
    for (auto& v : wv) v = n(rng);
    for (auto& v : bv) v = n(rng);
    const auto y = conv2d(T::from_array({1, C, H, W}, xv), T::from_array({O, C, k, k}, wv),
                          T::from_array({O}, bv), stride, pad);
    const Index oh = (H + 2 * pad - k) / stride + 1, ow = (W + 2 * pad - k) / stride + 1;
    REQUIRE(y.shape() == Shape{1, O, oh, ow});
    double worst = 0;
    for (Index o = 0; o < O; ++o)
      for (Index oy = 0; oy < oh; ++oy)
        for (Index ox = 0; ox < ow; ++ox) {
          double acc = bv[o];
          for (Index c = 0; c < C; ++c)
            for (Index ky = 0; ky < k; ++ky)
              for (Index kx = 0; kx < k; ++kx) {
                const Index iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += wv[((o * C + c) * k + ky) * k + kx] * xv[(c * H + iy) * W + ix];
              }
          worst = std::max(worst, std::abs(acc - y.value()[(o * oh + oy) * ow + ox]));
        }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("grad_check accepts a sum of squares") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  auto x = T::from_vector({4}, {u(rng), u(rng), u(rng), u(rng)});
  const auto r = grad_check([](const T& v) { return sum(square(v)); }, x, 1e-5, 1e-6);
  CHECK(r.pass);
  CHECK(r.checked == 4);
}

TEST_CASE("grad_check flags a wrong gradient") {
  // relu has gradient 0 at the kink from the left; probe across it.
  auto x = T::from_vector({1}, {0.0});
  const auto r = grad_check([](const T& v) { return sum(relu(v)); }, x, 1e-5, 1e-4);
  CHECK_FALSE(r.pass);
}

TEST_CASE("registered primitive checks pass") {
  const auto checks = run_primitive_checks(8, 3, 11);
  for (const auto& c : checks) {
    INFO(c.name << " rel " << c.worst.max_rel_err);
    CHECK(c.pass);
  }
}

TEST_CASE("adam: zero gradient leaves the parameter and counts the step") {
  AdamState<double> s;
  auto p = T::from_vector({2}, {1, 2}, true);
  CHECK(adam_step<double>(s, p, Array<double>::Zero(2)));
  CHECK(s.step == 1);
  CHECK(p[0] == 1);
  CHECK(p[1] == 2);
}

TEST_CASE("adam: first step on x^2 from 1 moves by lr") {
  AdamState<double> s;
  auto p = T::from_vector({1}, {1.0}, true);
  adam_step<double>(s, p, Array<double>::Constant(1, 2.0));
  // mhat = 2, vhat = 4, step = lr * 2 / (2 + eps)
  CHECK(p[0] == doctest::Approx(1 - 1e-4 * 2 / (2 + 1e-8)).epsilon(1e-15));
}

TEST_CASE("adam matches the reference recurrence for 10 steps") {
  AdamState<double> s;
  s.lr = 0.05;
  auto p = T::from_vector({1}, {1.5}, true);
  oracle::ScalarAdam ref{0.05, 0.9, 0.999, 1e-8};
  double x = 1.5;
  for (int k = 0; k < 10; ++k) {
    adam_step<double>(s, p, Array<double>::Constant(1, 2 * p[0]));
    x = ref.update(x, 2 * x);
    CHECK(std::abs(p[0] - x) < 1e-12);
  }
}

TEST_CASE("adam skips non-finite gradients") {
  AdamState<double> s;
  auto p = T::from_vector({2}, {1, 2}, true);
  Array<double> g(2);
  g << 1, std::nan("");
  CHECK_FALSE(adam_step(s, p, g));
  CHECK(s.step == 0);
  CHECK(p[0] == 1);
}

TEST_CASE("Adam class steps every parameter once") {
  auto a = T::from_vector({1}, {1.0}, true);
  auto b = T::from_vector({1}, {2.0}, true);
  Adam<double> opt({a, b}, 0.1);
  backward(sum(square(a)));
  CHECK(opt.step());
  CHECK(a[0] < 1.0);
  CHECK(b[0] == 2.0);
  CHECK(opt.states()[1].step == 1);
}
