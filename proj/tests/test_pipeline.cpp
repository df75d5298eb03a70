#include "photogeo/ops.hpp"
#include "photogeo/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace photogeo;

namespace {

TrainConfig tiny_config(std::uint64_t seed = 1) {
  TrainConfig cfg;
  for (const auto& [k, v] : parse_config_text("image_size = 16\nchannels = 4,8,8\npose_channels = 4,8\n"
                                              "zdim = 16\nbatch_size = 4\nsynth_count = 24\ntest_count = 8\n"))
    cfg.set(k, v);
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\n lr = 0.002 \n\nbatch_size=8 # trailing\n");
  CHECK(kv.at("lr") == "0.002");
  CHECK(kv.at("batch_size") == "8");
  CHECK_THROWS(parse_config_text("novalue\n"));
  TrainConfig cfg;
  CHECK_THROWS(cfg.set("no_such_key", "1"));
  cfg.set("flip_prob", "1.5");
  CHECK_THROWS(cfg.validate());
  TrainConfig b;
  b.set("batch_size", "1");
  CHECK_THROWS(b.validate());
}

TEST_CASE("config map round trip") {
  auto cfg = tiny_config(4);
  cfg.set("lambda_d", "0.25");
  cfg.set("scene.yaw_scale", "0.2");
  TrainConfig back;
  for (const auto& [k, v] : cfg.to_map()) back.set(k, v);
  CHECK(back.to_map() == cfg.to_map());
  CHECK(back.net.seed == 4);
}

TEST_CASE("log records recombine to the objective") {
  auto cfg = tiny_config();
  const auto data = load_training_data(cfg, std::cerr);
  Decomposer<float> net(cfg.net);
  Trainer trainer(cfg, net);
  const auto r = trainer.step(batch_images<float>(data, {0, 1, 2, 3}));
  const auto& w = cfg.weights;
  CHECK(std::abs(w.lambda1 * r.l1 + w.lambda_perc * r.perceptual + w.lambda_d * r.depth_pair +
                 w.lambda_vp * r.viewpoint - r.objective) < 1e-6);
  CHECK_FALSE(r.skipped);
  CHECK(TrainLogRecord::csv_header().find("objective") != std::string::npos);
  CHECK(r.to_line().find("objective=") != std::string::npos);
}

TEST_CASE("one step on a fixed batch is reproducible") {
  auto run = [] {
    auto cfg = tiny_config(3);
    const auto data = load_training_data(cfg, std::cerr);
    Decomposer<float> net(cfg.net);
    Trainer trainer(cfg, net);
    trainer.step(batch_images<float>(data, {0, 1, 2, 3}));
    auto r = trainer.step(batch_images<float>(data, {4, 5, 6, 7}));
    r.wall_seconds = 0;
    return r.to_csv();
  };
  CHECK(run() == run());
}

TEST_CASE("flip probability zero never mirrors") {
  auto cfg = tiny_config();
  cfg.flip_prob = 0;
  const auto data = load_training_data(cfg, std::cerr);
  Decomposer<float> a(cfg.net), b(cfg.net);
  Trainer ta(cfg, a), tb(cfg, b);
  const auto x = batch_images<float>(data, {0, 1, 2, 3});
  const auto ra = ta.step(x);
  const auto rb = tb.measure(x, {false, false, false, false});
  CHECK(ra.objective == rb.objective);
}

TEST_CASE("training on a small set lowers the objective") {
  auto cfg = tiny_config(2);
  cfg.iterations = 60;
  const auto data = load_training_data(cfg, std::cerr);
  const auto [train, test] = holdout_split(data.samples.size(), cfg.test_count);
  Decomposer<float> net(cfg.net);
  Trainer trainer(cfg, net);
  const std::vector<bool> noflip(4, false);
  const auto x = batch_images<float>(data, {train[0], train[1], train[2], train[3]});
  const double before = trainer.measure(x, noflip).objective;
  trainer.fit(data, train, nullptr);
  CHECK(trainer.iteration() == 60);
  CHECK(trainer.measure(x, noflip).objective < before);
}

TEST_CASE("oracle predictions score perfectly") {
  auto cfg = tiny_config();
  const auto data = load_training_data(cfg, std::cerr);
  std::vector<std::size_t> idx = {0, 1, 2, 3, 4};
  const auto report = evaluate_predictions(data, idx, oracle_predictions(data, idx), cfg.fov_deg);
  CHECK(report.si_error == 0);
  CHECK(report.normal_error_deg == 0);
  CHECK(report.median_pearson == doctest::Approx(1));
  CHECK(report.recon_l1 == 0);
  CHECK(report.baseline_si_error > 0);
}

TEST_CASE("evaluation rejects data without ground truth") {
  auto cfg = tiny_config();
  auto data = load_training_data(cfg, std::cerr);
  data.samples[0].has_ground_truth = false;
  CHECK_THROWS(evaluate_predictions(data, {0}, oracle_predictions(generate_dataset(1, 1, cfg.scene), {0}), cfg.fov_deg));
}

TEST_CASE("holdout split") {
  const auto [tr, te] = holdout_split(10, 3);
  CHECK(tr.size() == 7);
  CHECK(te == std::vector<std::size_t>{7, 8, 9});
  CHECK_THROWS(holdout_split(3, 3));
}

TEST_CASE("checkpoint round trip keeps the metrics") {
  auto cfg = tiny_config(6);
  cfg.iterations = 5;
  const auto data = load_training_data(cfg, std::cerr);
  const auto [train, test] = holdout_split(data.samples.size(), cfg.test_count);
  Decomposer<float> net(cfg.net);
  Trainer(cfg, net).fit(data, train, nullptr);
  const auto path = std::filesystem::temp_directory_path() / "photogeo_pipeline.ckpt";
  net.save(path);
  const auto back = Decomposer<float>::load(path);
  CHECK(evaluate(net, data, test, cfg.fov_deg) == evaluate(back, data, test, cfg.fov_deg));
  std::filesystem::remove(path);
}

namespace {

SceneFactors factors_of(const SceneSample& s) {
  SceneFactors f;
  f.depth = s.depth;
  f.albedo = s.albedo;
  f.pose = s.pose;
  f.light_x_deg = s.light_x_deg;
  f.light_y_deg = s.light_y_deg;
  f.ambient = s.ambient;
  f.diffuse = s.diffuse;
  return f;
}

}  // namespace

TEST_CASE("identity view re-renders the reconstruction") {
  SceneConfig cfg;
  cfg.image_size = 16;
  const auto s = generate_scene(3, cfg);
  const auto img = render_view(factors_of(s), 0, 0, std::nullopt, cfg.padded_intrinsics(), cfg.image_size,
                               0.5 * (cfg.depth_min + cfg.depth_max));
  double worst = 0;
  for (std::size_t i = 0; i < s.image.size(); ++i) worst = std::max(worst, std::abs(img.data[i] - s.image[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("mirrored yaw pair gives mirrored images") {
  SceneConfig cfg;
  cfg.image_size = 16;
  auto s = generate_scene(4, cfg);
  s.pose.setZero();
  s.light_x_deg = 0;
  auto f = factors_of(s);
  const double mid = 0.5 * (cfg.depth_min + cfg.depth_max);
  const auto K = cfg.padded_intrinsics();
  const auto left = render_view(f, 20, 0, std::nullopt, K, cfg.image_size, mid);
  const auto right = render_view(f, -20, 0, std::nullopt, K, cfg.image_size, mid);
  const Index S = cfg.image_size;
  // The quad diagonals do not mirror onto themselves, so the two meshes
  // differ slightly between vertices.
  double err = 0;
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < S; ++y)
      for (Index x = 0; x < S; ++x)
        err += std::abs(left.data[static_cast<std::size_t>((c * S + y) * S + x)] -
                        right.data[static_cast<std::size_t>((c * S + y) * S + S - 1 - x)]);
  MESSAGE("mean mirror difference " << err / double(3 * S * S));
  CHECK(err / double(3 * S * S) < 5e-3);
}

TEST_CASE("changing the light leaves the warp untouched") {
  SceneConfig cfg;
  cfg.image_size = 16;
  const auto s = generate_scene(8, cfg);
  const auto K = cfg.padded_intrinsics();
  const Index G = cfg.grid_size();
  const auto depth = Tensor<double>::from_vector({1, 1, G, G}, s.depth);
  const auto pose = Tensor<double>::from_vector({1, 6}, std::vector<double>(s.pose.data(), s.pose.data() + 6));
  const auto img = Tensor<double>::from_vector({1, 3, G, G}, s.albedo);
  const auto a = reproject(img, depth, pose, K, 16, 16);
  const auto b = reproject(affine(img, 0.5, 0.1), depth, pose, K, 16, 16);
  CHECK((a.warp.coords.value() == b.warp.coords.value()).all());
  auto f = factors_of(s);
  const double mid = 0.5 * (cfg.depth_min + cfg.depth_max);
  bool empty = true;
  const auto lit = render_view(f, 0, 0, std::make_pair(30.0, -10.0), K, 16, mid, &empty);
  CHECK_FALSE(empty);
  render_view(f, 0, 89, std::nullopt, K, 16, mid, &empty);
  CHECK_THROWS(render_view(f, 95, 0, std::nullopt, K, 16, mid));
}
