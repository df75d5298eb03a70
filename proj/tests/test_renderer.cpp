#include "oracles.hpp"
#include "photogeo/ops.hpp"
#include "photogeo/renderer.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace photogeo;
using T = Tensor<double>;

namespace {

std::vector<double> smooth_depth(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(-1, 1);
  const double a = u(rng), b = u(rng), c = u(rng), amp = 0.05 * u(rng);
  std::vector<double> d(static_cast<std::size_t>(n * n));
  for (Index v = 0; v < n; ++v)
    for (Index x = 0; x < n; ++x)
      d[static_cast<std::size_t>(v * n + x)] = 0.5 + amp * std::sin(0.4 * a * x + 0.4 * b * v + 3 * c);
  return d;
}

}  // namespace

TEST_CASE("pixel mesh counts") {
  const auto K2 = intrinsics_from_fov<double>(2, 2, 25.0);
  const std::vector<double> d2(4, 0.5);
  const auto m = tessellate(d2.data(), K2);
  CHECK(m.vertices.size() == 4);
  CHECK(m.triangles.size() == 2);
  CHECK(triangle_count(64, 64) == 7938);
  const auto K = intrinsics_from_fov<double>(6, 6, 25.0);
  const std::vector<double> flat(36, 0.5);
  for (const auto& v : tessellate(flat.data(), K).vertices) CHECK(v.z() == 0.5);
}

TEST_CASE("quad triangles follow the documented split") {
  const auto t0 = quad_triangle(5, 2 * 6), t1 = quad_triangle(5, 2 * 6 + 1);
  // quad 6 on a 5-wide grid is (u, v) = (2, 1), vertex a = 7
  CHECK(t0 == std::array<Index, 3>{7, 8, 13});
  CHECK(t1 == std::array<Index, 3>{7, 13, 12});
}

TEST_CASE("PLY export lists vertices and faces") {
  const auto K = intrinsics_from_fov<double>(3, 3, 25.0);
  const std::vector<double> d(9, 0.5);
  const auto path = std::filesystem::temp_directory_path() / "photogeo_mesh_test.ply";
  write_ply(path, tessellate(d.data(), K));
  std::ifstream f(path);
  std::string all((std::istreambuf_iterator<char>(f)), {});
  CHECK(all.find("element vertex 9") != std::string::npos);
  CHECK(all.find("element face 8") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("identity pose returns the input depth") {
  const Index n = 10;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  std::mt19937_64 rng(1);
  const auto d = smooth_depth(rng, n);
  const auto rd = rasterize_depth(T::from_vector({1, 1, n, n}, d), T::zeros({1, 6}), K);
  for (Index v = 1; v < n - 1; ++v)
    for (Index u = 1; u < n - 1; ++u) CHECK(rd.depth[v * n + u] == doctest::Approx(d[v * n + u]).epsilon(1e-14));
}

TEST_CASE("dolly of a fronto-parallel plane adds tz") {
  const Index n = 12;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const auto rd = rasterize_depth(T::full({1, 1, n, n}, 0.5), T::from_vector({1, 6}, {0, 0, 0, 0, 0, -0.05}), K, false);
  int covered = 0;
  for (Index i = 0; i < n * n; ++i) {
    if (!rd.coverage[static_cast<std::size_t>(i)]) continue;
    ++covered;
    CHECK(rd.depth[i] == doctest::Approx(0.45).epsilon(1e-12));
  }
  CHECK(covered > 0);
}

TEST_CASE("rasterizer matches the brute-force oracle") {
  const Index n = 16;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> rot(-0.3, 0.3), tr(-0.1, 0.1);
  for (int s = 0; s < 10; ++s) {
    const auto d = smooth_depth(rng, n);
    const std::vector<double> w = {rot(rng), rot(rng), rot(rng), tr(rng), tr(rng), tr(rng)};
    const auto rd = rasterize_depth(T::from_vector({1, 1, n, n}, d), T::from_vector({1, 6}, w), K, false);
    Vector6<double> wv;
    for (int j = 0; j < 6; ++j) wv[j] = w[static_cast<std::size_t>(j)];
    const auto [R, Tr] = se3_exp(wv);
    const auto ref = oracle::brute_force_zbuffer(d, R, Tr, K);
    for (Index i = 0; i < n * n; ++i) {
      const bool hit = std::isfinite(ref.depth[static_cast<std::size_t>(i)]);
      CHECK(bool(rd.coverage[static_cast<std::size_t>(i)]) == hit);
      if (hit) CHECK(std::abs(rd.depth[i] - ref.depth[static_cast<std::size_t>(i)]) < 1e-9);
    }
  }
}

TEST_CASE("hole filling copies the nearest covered depth") {
  const Index n = 8;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const auto rd = rasterize_depth(T::full({1, 1, n, n}, 0.5), T::from_vector({1, 6}, {0, 0, 0, 0.03, 0, 0}), K);
  for (Index i = 0; i < n * n; ++i) {
    CHECK(rd.observed[static_cast<std::size_t>(i)]);
    CHECK(rd.depth[i] == doctest::Approx(0.5).epsilon(1e-12));
  }
  CHECK(std::count(rd.coverage.begin(), rd.coverage.end(), 0) > 0);
}

TEST_CASE("pose entirely behind the camera is degenerate") {
  const Index n = 8;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const auto rd = rasterize_depth(T::full({1, 1, n, n}, 0.5), T::from_vector({1, 6}, {0, 0, 0, 0, 0, -0.6}), K);
  CHECK(rd.degenerate[0]);
}

TEST_CASE("rasterize_depth rejects non-positive depth") {
  const auto K = intrinsics_from_fov<double>(4, 4, 25.0);
  CHECK_THROWS_AS(rasterize_depth(T::zeros({1, 1, 4, 4}), T::zeros({1, 6}), K), std::invalid_argument);
}

TEST_CASE("bilinear sampling") {
  const Index n = 4;
  Array<double> img(n * n);
  for (Index i = 0; i < n * n; ++i) img[i] = double(i * i);
  const auto image = T::from_array({1, 1, n, n}, img);
  Array<double> c(2 * n * n);
  for (Index i = 0; i < n * n; ++i) {
    c[i] = double(i % n);
    c[n * n + i] = double(i / n);
  }
  const std::vector<std::uint8_t> valid(static_cast<std::size_t>(n * n), 1);
  const auto exact = bilinear_sample(image, WarpField<double>{T::from_array({1, 2, n, n}, c), valid});
  CHECK((exact.image.value() == img).all());
  Array<double> half = c;
  half.head(n * n) += 0.5;
  const auto mid = bilinear_sample(image, WarpField<double>{T::from_array({1, 2, n, n}, half), valid});
  CHECK(mid.image[0] == doctest::Approx(0.5 * (img[0] + img[1])));
  CHECK(mid.image[5] == doctest::Approx(0.5 * (img[5] + img[6])));
  CHECK(mid.in_bounds[3] == 0);
  CHECK(mid.image[3] == 0);
}

TEST_CASE("reproject at zero pose reproduces the canonical crop") {
  const Index n = 16, s = 8;
  const auto K = intrinsics_from_fov<double>(s, s, 25.0).padded(2);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  Array<double> img(3 * n * n);
  for (auto& v : img) v = u(rng);
  const auto canonical = T::from_array({1, 3, n, n}, img);
  const auto d = smooth_depth(rng, n);
  const auto r = reproject(canonical, T::from_vector({1, 1, n, n}, d), T::zeros({1, 6}), K, s, s);
  const auto ref = crop_center(canonical, s, s);
  CHECK((r.image.value() - ref.value()).abs().maxCoeff() < 1e-5);
}

TEST_CASE("translating a textured plane shifts the texture") {
  const Index n = 32;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  const double tx = 0.004, d0 = 0.5;
  auto texture = [](double x, double y) { return 0.5 + 0.25 * std::sin(0.2 * x) * std::cos(0.15 * y); };
  Array<double> img(n * n);
  for (Index i = 0; i < n * n; ++i) img[i] = texture(double(i % n), double(i / n));
  const auto r = reproject(T::from_array({1, 1, n, n}, img), T::full({1, 1, n, n}, d0),
                           T::from_vector({1, 6}, {0, 0, 0, tx, 0, 0}), K, n, n);
  const double shift = K.f * tx / d0;
  double err = 0;
  int count = 0;
  for (Index v = 4; v < n - 4; ++v) {
    for (Index u = 4; u < n - 4; ++u) {
      err += std::abs(r.image[v * n + u] - texture(double(u) - shift, double(v)));
      ++count;
    }
  }
  CHECK(err / count < 1e-3);
}
