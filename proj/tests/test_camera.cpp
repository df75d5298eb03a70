#include "photogeo/camera.hpp"
#include "photogeo/renderer.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace photogeo;
using T = Tensor<double>;

TEST_CASE("intrinsics from field of view") {
  const auto k2 = intrinsics_from_fov<double>(2, 2, 90.0);
  CHECK(k2.f == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(k2.cu == 0.5);
  CHECK(k2.cv == 0.5);
  const auto k64 = intrinsics_from_fov<double>(64, 64, 25.0);
  CHECK(k64.f == doctest::Approx(144.34268).epsilon(1e-6));
  CHECK(k64.cu == 31.5);
  const auto k128 = intrinsics_from_fov<double>(128, 128, 25.0);
  CHECK(k128.f == doctest::Approx(2 * k64.f).epsilon(1e-14));
}

TEST_CASE("padded and cropped intrinsics see the same rays") {
  const auto K = intrinsics_from_fov<double>(32, 32, 25.0);
  const auto P = K.padded(2);
  CHECK(P.width == 64);
  CHECK(P.f == K.f);
  CHECK(P.cu == 31.5);
  const auto C = P.cropped(32, 32);
  CHECK(C.cu == doctest::Approx(K.cu));
  CHECK((P.ray(16 + 3, 16 + 5) - K.ray(3, 5)).norm() < 1e-14);
}

TEST_CASE("so3_exp") {
  CHECK(so3_exp<double>(Eigen::Vector3d::Zero()).isIdentity(0));
  const auto R = so3_exp<double>(Eigen::Vector3d(0, 0, std::numbers::pi / 2));
  CHECK((R * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm() < 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector3d w(u(rng), u(rng), u(rng));
    const Eigen::Matrix3d ref = Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
    CHECK((so3_exp(w) - ref).norm() < 1e-13);
    CHECK((so3_exp<double>(-w) - so3_exp(w).transpose()).norm() < 1e-10);
  }
}

TEST_CASE("se3_exp splits rotation and translation") {
  Vector6<double> w = Vector6<double>::Zero();
  w[3] = 0.1;
  const auto [R, t] = se3_exp(w);
  CHECK(R.isIdentity(0));
  CHECK(t == Eigen::Vector3d(0.1, 0, 0));
}

TEST_CASE("pivot_pose keeps the pivot fixed under pure rotation") {
  const auto w = T::from_vector({2, 6}, {0.1, -0.3, 0.2, 0, 0, 0, 0, 0.4, 0, 0.01, -0.02, 0.03});
  const auto p = pivot_pose(w, 0.5);
  for (Index b = 0; b < 2; ++b) {
    const auto [R, t] = pose_at(p, b);
    const Eigen::Vector3d c(0, 0, 0.5);
    const Eigen::Vector3d moved = R * c + t;
    CHECK((moved - c - w.value().segment<3>(6 * b + 3).matrix()).norm() < 1e-15);
    CHECK(p.value().segment<3>(6 * b).isApprox(w.value().segment<3>(6 * b)));
  }
  CHECK((pivot_pose(T::zeros({1, 6}), 0.5).value() == 0).all());
}

TEST_CASE("unproject") {
  const auto K = intrinsics_from_fov<double>(32, 32, 25.0);
  CHECK((unproject(K, K.cu, K.cv, 0.5) - Eigen::Vector3d(0, 0, 0.5)).norm() == 0);
  const auto p1 = unproject(K, 3.0, 7.0, 1.0), p2 = unproject(K, 3.0, 7.0, 2.0);
  CHECK((p2 - 2 * p1).norm() < 1e-15);
  const auto back = K.project(unproject(K, 3.25, 7.5, 0.6));
  CHECK(std::abs(back.x() - 3.25) < 1e-12);
  CHECK(std::abs(back.y() - 7.5) < 1e-12);
}

namespace {

T constant_depth(Index n, double d) { return T::full({1, 1, n, n}, d); }

T pose(std::array<double, 6> w) { return T::from_vector({1, 6}, {w.begin(), w.end()}); }

}  // namespace

TEST_CASE("forward warp: identity, translation and dolly") {
  const Index n = 16;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const auto id = forward_warp_field(constant_depth(n, 0.5), pose({0, 0, 0, 0, 0, 0}), K);
  const auto tx = forward_warp_field(constant_depth(n, 0.5), pose({0, 0, 0, 0.02, 0, 0}), K);
  const auto tz = forward_warp_field(constant_depth(n, 0.5), pose({0, 0, 0, 0, 0, 0.1}), K);
  for (Index v = 0; v < n; ++v) {
    for (Index u = 0; u < n; ++u) {
      const Index i = v * n + u;
      CHECK(std::abs(id.coords[i] - double(u)) < 1e-12);
      CHECK(std::abs(id.coords[n * n + i] - double(v)) < 1e-12);
      CHECK(std::abs(tx.coords[i] - (u + K.f * 0.02 / 0.5)) < 1e-6);
      CHECK(std::abs(tx.coords[n * n + i] - double(v)) < 1e-6);
      const double s = 0.5 / 0.6;
      CHECK(std::abs(tz.coords[i] - (K.cu + s * (u - K.cu))) < 1e-9);
    }
  }
}

TEST_CASE("inverse warp: identity and pure translation invert the forward example") {
  const Index n = 16;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const auto id = inverse_warp_field(constant_depth(n, 0.5), pose({0, 0, 0, 0, 0, 0}), K);
  const auto tx = inverse_warp_field(constant_depth(n, 0.5), pose({0, 0, 0, 0.02, 0, 0}), K);
  for (Index i = 0; i < n * n; ++i) {
    CHECK(std::abs(id.coords[i] - double(i % n)) < 1e-12);
    CHECK(std::abs(tx.coords[i] - (double(i % n) - K.f * 0.02 / 0.5)) < 1e-9);
  }
}

TEST_CASE("inverse warp of rasterized depth undoes the forward warp") {
  const Index n = 16;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  Array<double> d(n * n);
  for (Index v = 0; v < n; ++v)
    for (Index u = 0; u < n; ++u) d[v * n + u] = 0.5 + 0.02 * std::sin(0.3 * u) * std::cos(0.2 * v);
  const auto depth = T::from_array({1, 1, n, n}, d);
  const auto w = pose({0.03, -0.05, 0.02, 0.01, -0.005, 0.01});
  const auto fwd = forward_warp_field(depth, w, K);
  const auto rd = rasterize_depth(depth, w, K, false);
  const auto inv = inverse_warp_field(rd.depth, w, K, rd.coverage);
  int tested = 0;
  for (Index v = 2; v < n - 2; ++v) {
    for (Index u = 2; u < n - 2; ++u) {
      const double fu = fwd.coords[v * n + u], fv = fwd.coords[n * n + v * n + u];
      const Index iu = Index(std::lround(fu)), iv = Index(std::lround(fv));
      if (iu < 1 || iv < 1 || iu >= n - 1 || iv >= n - 1) continue;
      // Sample the inverse field with bilinear weights at the forward target.
      const Index u0 = Index(std::floor(fu)), v0 = Index(std::floor(fv));
      const double a = fu - u0, b = fv - v0;
      bool covered = true;
      double su = 0, sv = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const Index j = (v0 + dy) * n + u0 + dx;
          covered = covered && rd.coverage[static_cast<std::size_t>(j)];
          const double wgt = (dx ? a : 1 - a) * (dy ? b : 1 - b);
          su += wgt * inv.coords[j];
          sv += wgt * inv.coords[n * n + j];
        }
      }
      if (!covered) continue;
      ++tested;
      CHECK(std::abs(su - double(u)) < 0.05);
      CHECK(std::abs(sv - double(v)) < 0.05);
    }
  }
  CHECK(tested > 50);
}

TEST_CASE("warp fields reject malformed inputs") {
  const auto K = intrinsics_from_fov<double>(8, 8, 25.0);
  CHECK_THROWS(forward_warp_field(T::full({1, 1, 4, 4}, 0.5), pose({0, 0, 0, 0, 0, 0}), K));
  CHECK_THROWS(forward_warp_field(T::full({1, 1, 8, 8}, 0.5), T::zeros({1, 5}), K));
}
