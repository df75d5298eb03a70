#include "photogeo/networks.hpp"
#include "photogeo/ops.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace photogeo;

namespace {

NetConfig small_config(std::uint64_t seed = 3) {
  NetConfig c;
  c.image_size = 16;
  c.channels = {4, 8, 8};
  c.pose_channels = {4, 8};
  c.zdim = 16;
  c.seed = seed;
  return c;
}

Tensor<float> random_images(Index B, Index S, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  Array<float> a(B * 3 * S * S);
  for (auto& v : a) v = u(rng);
  return Tensor<float>::from_array({B, 3, S, S}, a);
}

}  // namespace

TEST_CASE("squash_range") {
  const auto x = Tensor<double>::from_vector({3}, {0, 10, -10}, true);
  const auto y = squash_range(x, 0.4, 0.6);
  CHECK(y[0] == 0.5);
  const auto a = squash_range(x, -60.0, 60.0);
  CHECK(a[1] < 60);
  CHECK(a[1] == doctest::Approx(60).epsilon(1e-6));
  backward(sum(squash_range(x, -60.0, 60.0)));
  CHECK(x.grad()[0] == 60);
}

TEST_CASE("config validation and map round trip") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.grid_size() == 32);
  const auto back = NetConfig::from_map(c.to_map());
  CHECK(back.to_map() == c.to_map());
  c.image_size = 20;
  CHECK_THROWS(c.validate());
}

TEST_CASE("zero output layers predict range centres") {
  auto cfg = small_config();
  cfg.head_init = 0;
  const Decomposer<float> net(cfg);
  const auto out = net(random_images(2, 16, 1));
  CHECK(out.depth.shape() == Shape{2, 1, 32, 32});
  CHECK(out.albedo.shape() == Shape{2, 3, 32, 32});
  CHECK(out.pose.shape() == Shape{2, 6});
  CHECK(out.light_angles.shape() == Shape{2, 2});
  CHECK((out.depth.value() == 0.5f).all());
  CHECK((out.pose.value() == 0.0f).all());
  CHECK((out.light_angles.value() == 0.0f).all());
  CHECK(out.albedo.value().allFinite());
  CHECK((out.albedo.value() > 0).all());
  CHECK((out.albedo.value() < 1).all());
}

TEST_CASE("default output layers start near the range centres") {
  const Decomposer<float> net(small_config());
  const auto out = net(random_images(2, 16, 1));
  CHECK((out.depth.value() - 0.5f).abs().maxCoeff() < 0.05f);
  CHECK(out.pose.value().abs().maxCoeff() < 0.1f);
  CHECK(out.light_angles.value().abs().maxCoeff() < 15.0f);
  CHECK((out.light_angles.value() != 0.0f).any());
}

TEST_CASE("initialization and forward pass are deterministic") {
  const Decomposer<float> a(small_config(5)), b(small_config(5)), c(small_config(6));
  const auto& pa = a.named_parameters();
  const auto& pb = b.named_parameters();
  REQUIRE(pa.size() == pb.size());
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    CHECK((pa[i].second.value() == pb[i].second.value()).all());
    differs = differs || !(pa[i].second.value() == c.named_parameters()[i].second.value()).all();
  }
  CHECK(differs);
  const auto x = random_images(2, 16, 2);
  CHECK((a(x).albedo.value() == a(x).albedo.value()).all());
}

TEST_CASE("dense albedo blocks add parameters") {
  auto cfg = small_config();
  const Index plain = Decomposer<float>(cfg).parameter_count();
  cfg.dense_albedo = true;
  const Decomposer<float> dense(cfg);
  CHECK(dense.parameter_count() > plain);
  CHECK(dense(random_images(1, 16, 4)).albedo.shape() == Shape{1, 3, 32, 32});
}

TEST_CASE("gradients reach every parameter") {
  Decomposer<float> net(small_config());
  // Move the zero-initialized heads so the upstream layers see a gradient.
  for (auto& p : net.parameters()) p.mutable_value() += 0.01f;
  const auto out = net(random_images(2, 16, 7));
  backward(add(add(sum(out.depth), sum(out.albedo)), add(sum(out.pose), sum(out.light_angles))));
  for (const auto& [name, p] : net.named_parameters()) {
    INFO(name);
    CHECK(p.has_grad());
  }
}

TEST_CASE("checkpoint round trip") {
  Decomposer<float> net(small_config(9));
  for (auto& p : net.parameters()) p.mutable_value() *= 1.5f;
  const auto path = std::filesystem::temp_directory_path() / "photogeo_net_test.ckpt";
  net.save(path);
  const auto back = Decomposer<float>::load(path);
  CHECK(back.config().to_map() == net.config().to_map());
  const auto x = random_images(1, 16, 3);
  CHECK((back(x).depth.value() == net(x).depth.value()).all());
  CHECK((back(x).albedo.value() == net(x).albedo.value()).all());
  std::filesystem::remove(path);
}

TEST_CASE("loading rejects a foreign file") {
  const auto path = std::filesystem::temp_directory_path() / "photogeo_not_a_ckpt.txt";
  { std::ofstream(path) << "hello\n"; }
  CHECK_THROWS(Decomposer<float>::load(path));
  std::filesystem::remove(path);
}
