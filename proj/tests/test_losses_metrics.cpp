#include "photogeo/losses.hpp"
#include "photogeo/metrics.hpp"
#include "photogeo/ops.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace photogeo;
using T = Tensor<double>;

namespace {

T random(std::mt19937_64& rng, Shape s, double lo = 0, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array<double> a(shape_size(s));
  for (auto& v : a) v = u(rng);
  return T::from_array(s, a);
}

}  // namespace

TEST_CASE("l1 loss") {
  std::mt19937_64 rng(1);
  const auto a = random(rng, {2, 3, 4, 4}), b = random(rng, {2, 3, 4, 4});
  CHECK(l1_loss(a, a).item() == 0);
  CHECK(l1_loss(a + 0.5, a).item() == doctest::Approx(0.5).epsilon(1e-15));
  double acc = 0;
  for (Index i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  CHECK(std::abs(l1_loss(a, b).item() - acc / double(a.size())) < 1e-12);
}

TEST_CASE("perceptual loss") {
  std::mt19937_64 rng(2);
  const auto img = random(rng, {2, 3, 16, 16});
  const RandomConvEncoder<double> enc(7);
  CHECK(perceptual_loss(img, img, enc).item() == 0);
  const IdentityEncoder<double> id;
  const auto other = random(rng, {2, 3, 16, 16});
  double mse = 0;
  for (Index i = 0; i < img.size(); ++i) mse += (img[i] - other[i]) * (img[i] - other[i]);
  CHECK(perceptual_loss(img, other, id).item() == doctest::Approx(mse / double(img.size())).epsilon(1e-13));
  const auto noise = random(rng, {2, 3, 16, 16}, -1, 1);
  double prev = 1e300;
  for (double s : {0.1, 0.01, 0.001}) {
    const double v = perceptual_loss(img + noise * s, img, enc).item();
    CHECK(v > 0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("viewpoint regularizer") {
  CHECK(reg_viewpoint(T::from_vector({2, 6}, {1, 2, 3, 4, 5, 6, -1, -2, -3, -4, -5, -6})).item() == 0);
  CHECK(reg_viewpoint(T::from_vector({1, 6}, {0.6, 0, 0.8, 0, 0, 0})).item() == doctest::Approx(1).epsilon(1e-15));
  std::mt19937_64 rng(3);
  const auto p = random(rng, {5, 6}, -1, 1);
  double ref = 0;
  for (Index j = 0; j < 6; ++j) {
    double m = 0;
    for (Index b = 0; b < 5; ++b) m += p[b * 6 + j];
    ref += (m / 5) * (m / 5);
  }
  CHECK(std::abs(reg_viewpoint(p).item() - ref) < 1e-12);
}

TEST_CASE("depth pair regularizer") {
  std::mt19937_64 rng(4);
  const auto a = random(rng, {1, 1, 4, 4}, 0.4, 0.6), b = random(rng, {1, 1, 4, 4}, 0.4, 0.6);
  CHECK(reg_depth_pair(a, a).item() == 0);
  CHECK(reg_depth_pair(a + 0.05, a).item() == doctest::Approx(0.0025).epsilon(1e-12));
  double ref = 0;
  for (Index i = 0; i < 16; ++i) ref += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(std::abs(reg_depth_pair(a, b).item() - ref / 16) < 1e-12);
}

TEST_CASE("depth pair term averages every pair") {
  std::mt19937_64 rng(5);
  const Index B = 5, P = 9;
  const auto d = random(rng, {B, 1, 3, 3}, 0.4, 0.6);
  double ref = 0;
  for (Index i = 0; i < B; ++i)
    for (Index j = i + 1; j < B; ++j)
      for (Index p = 0; p < P; ++p) ref += (d[i * P + p] - d[j * P + p]) * (d[i * P + p] - d[j * P + p]) / double(P);
  ref *= 2.0 / double(B * (B - 1));
  CHECK(std::abs(depth_pair_term(d).item() - ref) < 1e-12);
  CHECK(depth_pair_term(random(rng, {1, 1, 3, 3})).item() == 0);
}

TEST_CASE("objective combines its terms") {
  std::mt19937_64 rng(6);
  const auto rec = random(rng, {2, 3, 16, 16}), target = random(rng, {2, 3, 16, 16});
  const auto depth = random(rng, {2, 1, 8, 8}, 0.4, 0.6), poses = random(rng, {2, 6}, -0.5, 0.5);
  const RandomConvEncoder<double> enc(3);
  const auto zero = objective(rec, target, depth, poses, LossWeights{0, 0, 0, 0}, &enc);
  CHECK(zero.total.item() == 0);
  const auto only_d = objective(rec, target, depth, poses, LossWeights{0, 0, 1, 0}, &enc);
  const auto da = T::from_array({1, 1, 8, 8}, depth.value().head(64));
  const auto db = T::from_array({1, 1, 8, 8}, depth.value().tail(64));
  CHECK(only_d.total.item() == doctest::Approx(reg_depth_pair(da, db).item()).epsilon(1e-13));
  const LossWeights lw;
  const auto t = objective(rec, target, depth, poses, lw, &enc);
  const double hand = lw.lambda1 * l1_loss(rec, target).item() + lw.lambda_perc * perceptual_loss(rec, target, enc).item() +
                      lw.lambda_d * depth_pair_term(depth).item() + lw.lambda_vp * reg_viewpoint(poses).item();
  CHECK(std::abs(t.total.item() - hand) < 1e-10);
}

TEST_CASE("scale-invariant error") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.4, 0.6), s(0.1, 10);
  std::vector<double> d(100);
  for (auto& v : d) v = u(rng);
  CHECK(si_error(d, d) == 0);
  for (int k = 0; k < 10; ++k) {
    const double sc = s(rng);
    std::vector<double> e = d;
    for (auto& v : e) v *= sc;
    CHECK(si_error(e, d) < 1e-12);
  }
  std::vector<double> half = d;
  for (std::size_t i = 0; i < half.size(); i += 2) half[i] *= std::exp(1.0);
  CHECK(std::abs(si_error(half, d) - 0.5) < 1e-12);
  CHECK_THROWS(si_error(std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)));
}

TEST_CASE("normal angle error") {
  const Index n = 8;
  const auto K = intrinsics_from_fov<double>(n, n, 25.0);
  std::vector<double> flat(static_cast<std::size_t>(n * n), 0.5), twice(static_cast<std::size_t>(n * n), 1.0);
  CHECK(normal_angle_error(flat, flat, K) == 0);
  CHECK(normal_angle_error(twice, flat, K) < 1e-10);
  std::vector<double> bumpy = flat;
  for (Index i = 0; i < n * n; ++i) bumpy[static_cast<std::size_t>(i)] += 0.01 * std::sin(double(i));
  CHECK(normal_angle_error(bumpy, bumpy, K) == 0);
  CHECK(normal_angle_error(bumpy, flat, K) > 0);
}

TEST_CASE("pearson and keypoint correlation") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 1);
  std::vector<std::vector<double>> gt(5, std::vector<double>(66)), neg = gt, aff = gt;
  for (std::size_t f = 0; f < gt.size(); ++f) {
    for (std::size_t k = 0; k < 66; ++k) {
      gt[f][k] = g(rng);
      neg[f][k] = -gt[f][k];
      aff[f][k] = 3.5 * gt[f][k] + 0.2;
    }
  }
  CHECK(keypoint_depth_correlation(gt, gt) == doctest::Approx(66).epsilon(1e-12));
  CHECK(keypoint_depth_correlation(neg, gt) == doctest::Approx(-66).epsilon(1e-12));
  CHECK(keypoint_depth_correlation(aff, gt) == doctest::Approx(66).epsilon(1e-12));
  CHECK(pearson(std::vector<double>(66, 1.0), gt[0]) == 0);
}

TEST_CASE("metric report round-trips") {
  MetricReport r;
  for (int i = 0; i < 3; ++i) r.per_image.push_back({i, 0.01 * i + 1.0 / 3, 10.0 / 7 + i, 0.1 * i, 0.02, 0.05});
  r.per_image.push_back({3, std::nan(""), std::nan(""), 0, 0.01, std::nan("")});
  r.aggregate();
  CHECK(std::isfinite(r.si_error));
  const auto back = MetricReport::from_text(r.to_text(), r.to_csv());
  CHECK(back == r);
  CHECK(r.to_csv().rfind("index,si_error,normal_error_deg,pearson,recon_l1,baseline_si_error\n", 0) == 0);
  const auto dir = std::filesystem::temp_directory_path();
  r.save(dir / "photogeo_report.txt", dir / "photogeo_report.csv");
  CHECK(MetricReport::load(dir / "photogeo_report.txt", dir / "photogeo_report.csv") == r);
}
