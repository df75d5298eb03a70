#include "photogeo/image_io.hpp"
#include "photogeo/ops.hpp"
#include "photogeo/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace photogeo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("same seed gives the same scene") {
  const SceneConfig cfg;
  const auto a = generate_scene(42, cfg), b = generate_scene(42, cfg), c = generate_scene(43, cfg);
  CHECK(a.image == b.image);
  CHECK(a.depth == b.depth);
  CHECK(a.pose == b.pose);
  CHECK(a.depth != c.depth);
}

TEST_CASE("canonical factors are mirror symmetric and in range") {
  SceneConfig cfg;
  cfg.image_size = 8;
  const Index G = cfg.grid_size();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto s = generate_scene(seed, cfg);
    bool ok = true;
    for (Index y = 0; y < G && ok; ++y) {
      for (Index x = 0; x < G && ok; ++x) {
        const auto i = static_cast<std::size_t>(y * G + x), j = static_cast<std::size_t>(y * G + G - 1 - x);
        ok = s.depth[i] == s.depth[j] && s.depth[i] >= cfg.depth_min && s.depth[i] <= cfg.depth_max;
        for (Index c = 0; c < 3 && ok; ++c) {
          const auto o = static_cast<std::size_t>(c * G * G);
          ok = s.albedo[o + i] == s.albedo[o + j];
        }
      }
    }
    CHECK_MESSAGE(ok, "seed " << seed);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(s.pose[k]) <= 60 * M_PI / 180);
    for (int k = 3; k < 6; ++k) CHECK(std::abs(s.pose[k]) <= 0.1);
  }
}

TEST_CASE("image is the generator's own forward pass") {
  const SceneConfig cfg;
  const auto s = generate_scene(5, cfg);
  CHECK(render_scene(s, cfg) == s.image);
}

TEST_CASE("zero pose without diffuse light renders ks * albedo") {
  const SceneConfig cfg;
  auto s = generate_scene(6, cfg);
  s.pose.setZero();
  s.diffuse = 0;
  const auto img = render_scene(s, cfg);
  const Index S = cfg.image_size, G = cfg.grid_size(), o = (G - S) / 2;
  double worst = 0;
  for (Index c = 0; c < 3; ++c)
    for (Index y = 0; y < S; ++y)
      for (Index x = 0; x < S; ++x)
        worst = std::max(worst, std::abs(img[static_cast<std::size_t>((c * S + y) * S + x)] -
                                         s.ambient * s.albedo[static_cast<std::size_t>((c * G + y + o) * G + x + o)]));
  CHECK(worst < 1e-9);
}

TEST_CASE("scene archive round trip") {
  SceneConfig cfg;
  cfg.image_size = 8;
  const auto data = generate_dataset(11, 4, cfg);
  const auto dir = fresh_dir("photogeo_archive_test");
  write_scene_archive(dir, data);
  const auto back = load_scene_archive(dir);
  REQUIRE(back.samples.size() == 4);
  CHECK(back.config.image_size == 8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.samples[i].pose == data.samples[i].pose);
    CHECK(back.samples[i].seed == data.samples[i].seed);
    for (std::size_t k = 0; k < data.samples[i].depth.size(); ++k)
      CHECK(std::abs(back.samples[i].depth[k] - data.samples[i].depth[k]) < 1e-5);
    for (std::size_t k = 0; k < data.samples[i].image.size(); ++k)
      CHECK(std::abs(back.samples[i].image[k] - data.samples[i].image[k]) < 1e-4);
  }
  fs::remove_all(dir);
}

TEST_CASE("image folder skips undecodable files") {
  const auto dir = fresh_dir("photogeo_folder_test");
  SceneConfig cfg;
  cfg.image_size = 8;
  const auto data = generate_dataset(1, 3, cfg);
  for (int i = 0; i < 3; ++i) {
    Image im{3, 8, 8, data.samples[static_cast<std::size_t>(i)].image};
    write_png(dir / ("img" + std::to_string(i) + ".png"), im);
  }
  { std::ofstream(dir / "img9.png") << "not a png"; }
  {
    // Truncated copy of a valid file.
    std::ifstream src(dir / "img0.png", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(src)), {});
    std::ofstream(dir / "img5.png", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  }
  std::ostringstream warn;
  const auto a = load_image_folder(dir, 8, warn);
  CHECK(a.samples.size() == 3);
  CHECK(warn.str().find("img9.png") != std::string::npos);
  CHECK(warn.str().find("img5.png") != std::string::npos);
  std::ostringstream quiet;
  const auto b = load_image_folder(dir, 8, quiet);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.samples[i].image == b.samples[i].image);
    CHECK(!a.samples[i].has_ground_truth);
    for (double v : a.samples[i].image) CHECK((v >= 0 && v <= 1));
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset split") {
  const auto s = split_dataset(10, {0.8, 0.1, 0.1}, 3);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 1);
  CHECK_THROWS(split_dataset(10, {1, 0, 0}, 3));
  const auto t = split_dataset(10, {0.8, 0.1, 0.1}, 3);
  CHECK(s.train == t.train);
  CHECK(s.test == t.test);
}

TEST_CASE("batching stacks samples") {
  SceneConfig cfg;
  cfg.image_size = 8;
  const auto data = generate_dataset(2, 3, cfg);
  const auto imgs = batch_images<float>(data, {2, 0});
  CHECK(imgs.shape() == Shape{2, 3, 8, 8});
  CHECK(imgs[0] == float(data.samples[2].image[0]));
  CHECK(batch_depths<double>(data, {1}).shape() == Shape{1, 1, 16, 16});
  CHECK(batch_poses<double>(data, {0, 1}).shape() == Shape{2, 6});
}
