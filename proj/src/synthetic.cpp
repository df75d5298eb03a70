#include "photogeo/synthetic.hpp"

#include "photogeo/photometric.hpp"
#include "photogeo/renderer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace photogeo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kRotationRange = 60.0;
constexpr double kTranslationRange = 0.1;
constexpr double kLightRange = 60.0;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// h(u, v) + h(W - 1 - u, v): symmetric bit for bit because the two terms
// are the same pair of doubles added in either order.
std::vector<double> mirror_sum(const std::vector<double>& h, Index W, Index H) {
  std::vector<double> out(h.size());
  for (Index v = 0; v < H; ++v)
    for (Index u = 0; u < W; ++u)
      out[static_cast<std::size_t>(v * W + u)] =
          h[static_cast<std::size_t>(v * W + u)] + h[static_cast<std::size_t>(v * W + (W - 1 - u))];
  return out;
}

}  // namespace

Intrinsics<double> SceneConfig::intrinsics() const {
  return intrinsics_from_fov<double>(image_size, image_size, fov_deg);
}

Intrinsics<double> SceneConfig::padded_intrinsics() const { return intrinsics().padded(pad_factor); }

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
  if (cfg.bumps_min < 1 || cfg.bumps_max < cfg.bumps_min) throw std::invalid_argument("generate_scene: bad bump count range");
  if (!(cfg.depth_min < cfg.depth_max)) throw std::invalid_argument("generate_scene: bad depth range");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const Index G = cfg.grid_size();
  const auto N = static_cast<std::size_t>(G * G);
  const double center = double(G - 1) / 2;
  const double half = double(cfg.image_size) / 2;  // visible region spans [-1, 1]
  auto coord = [&](Index i) { return (double(i) - center) / half; };

  SceneSample s;
  s.seed = seed;
  const double mid = 0.5 * (cfg.depth_min + cfg.depth_max);
  const double span = cfg.depth_max - cfg.depth_min;

  // Depth: one broad central protrusion plus smaller random bumps.
  const int k = std::uniform_int_distribution<int>(cfg.bumps_min, cfg.bumps_max)(rng);
  struct Bump {
    double x, y, sigma, amp;
  };
  std::vector<Bump> bumps;
  // The mirrored sum doubles a bump centered on the axis.
  bumps.push_back({0.0, uniform(-0.3, 0.3), uniform(0.5, 0.9), -span * uniform(0.12, 0.2)});
  for (int b = 1; b < k; ++b) {
    bumps.push_back({uniform(0.0, 0.8), uniform(-0.8, 0.8), uniform(0.15, 0.45),
                     span * uniform(-0.15, 0.1)});
  }
  std::vector<double> h(N, 0.0);
  for (Index v = 0; v < G; ++v) {
    for (Index u = 0; u < G; ++u) {
      double acc = 0;
      for (const auto& b : bumps) {
        const double dx = coord(u) - b.x, dy = coord(v) - b.y;
        acc += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
      }
      h[static_cast<std::size_t>(v * G + u)] = acc;
    }
  }
  s.depth = mirror_sum(h, G, G);
  const double lo = cfg.depth_min + 0.025 * span, hi = cfg.depth_max - 0.025 * span;
  for (auto& d : s.depth) d = std::clamp(mid + d, lo, hi);

  // Albedo: smooth color blobs plus a faint oriented stripe pattern.
  s.albedo.resize(3 * N);
  for (int c = 0; c < 3; ++c) {
    const double base = uniform(0.35, 0.65);
    std::vector<Bump> blobs;
    for (int b = 0; b < 3; ++b) blobs.push_back({uniform(0.0, 1.0), uniform(-1.0, 1.0), uniform(0.2, 0.6), cfg.albedo_contrast * uniform(-0.1, 0.1)});
    const double wx = uniform(4.0, 10.0), wy = uniform(4.0, 10.0), phase = uniform(0.0, 2 * std::numbers::pi);
    const double stripe = uniform(0.01, 0.04);
    std::vector<double> f(N);
    for (Index v = 0; v < G; ++v) {
      for (Index u = 0; u < G; ++u) {
        double acc = 0;
        for (const auto& b : blobs) {
          const double dx = coord(u) - b.x, dy = coord(v) - b.y;
          acc += b.amp * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
        }
        acc += stripe * std::sin(wx * coord(u) + wy * coord(v) + phase);
        f[static_cast<std::size_t>(v * G + u)] = acc;
      }
    }
    const auto sym = mirror_sum(f, G, G);
    for (std::size_t i = 0; i < N; ++i) s.albedo[c * N + i] = std::clamp(base + sym[i], 0.1, 0.9);
  }
  if (cfg.silhouette > 0) {
    // Elliptical object on a dark backdrop, edge softened over about one pixel.
    const double rx = cfg.silhouette * uniform(0.9, 1.1), ry = rx * uniform(1.1, 1.3), cy = uniform(-0.1, 0.1);
    const double soft = 1.0 / half;
    double backdrop[3];
    for (double& b : backdrop) b = uniform(0.05, 0.15);
    for (Index v = 0; v < G; ++v) {
      for (Index u = 0; u < G; ++u) {
        const double ex = coord(u) / rx, ey = (coord(v) - cy) / ry;
        const double r = std::sqrt(ex * ex + ey * ey);
        const double w = std::clamp((1 - r) * rx / soft + 0.5, 0.0, 1.0);
        const auto i = static_cast<std::size_t>(v * G + u);
        for (int c = 0; c < 3; ++c) s.albedo[c * N + i] = w * s.albedo[c * N + i] + (1 - w) * backdrop[c];
      }
    }
  }

  // Viewpoint: rotation about the object center, expressed as X' = R X + T.
  const double yaw = uniform(-1, 1) * cfg.yaw_scale * kRotationRange * kDeg;
  const double pitch = uniform(-1, 1) * cfg.pitch_scale * kRotationRange * kDeg;
  const double roll = uniform(-1, 1) * cfg.roll_scale * kRotationRange * kDeg;
  const Eigen::Matrix3d R = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()) *
                             Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()))
                                .toRotationMatrix();
  const Eigen::AngleAxisd aa(R);
  const Eigen::Vector3d c(0, 0, mid);
  Eigen::Vector3d t;
  for (int i = 0; i < 3; ++i) t[i] = uniform(-1, 1) * cfg.translation_scale * kTranslationRange;
  s.pose.head<3>() = aa.angle() * aa.axis();
  s.pose.tail<3>() = c - R * c + t;

  s.light_x_deg = uniform(-1, 1) * cfg.light_scale * kLightRange;
  s.light_y_deg = uniform(-1, 1) * cfg.light_scale * kLightRange;
  s.ambient = uniform(cfg.ambient_min, cfg.ambient_max);
  s.diffuse = uniform(cfg.diffuse_min, cfg.diffuse_max);
  s.image = render_scene(s, cfg);
  return s;
}

std::vector<double> render_scene(const SceneSample& s, const SceneConfig& cfg) {
  const Index G = cfg.grid_size(), S = cfg.image_size;
  const auto Kp = cfg.padded_intrinsics();
  const auto depth = Tensor<double>::from_vector({1, 1, G, G}, s.depth);
  const auto albedo = Tensor<double>::from_vector({1, 3, G, G}, s.albedo);
  const auto pose = Tensor<double>::from_vector({1, 6}, std::vector<double>(s.pose.data(), s.pose.data() + 6));
  const auto light = light_direction(Tensor<double>::from_vector({1, 2}, {s.light_x_deg, s.light_y_deg}));
  const auto normals = normals_from_depth(depth, Kp).normals;
  const auto canonical = shade(albedo, normals, light, Tensor<double>::from_vector({1}, {s.ambient}),
                               Tensor<double>::from_vector({1}, {s.diffuse}));
  const auto rec = reproject(canonical, depth, pose, Kp, S, S);
  return {rec.image.value().data(), rec.image.value().data() + rec.image.size()};
}

Dataset generate_dataset(std::uint64_t seed, std::size_t count, const SceneConfig& cfg) {
  Dataset d;
  d.config = cfg;
  d.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) d.samples.push_back(generate_scene(seed + i, cfg));
  return d;
}

namespace {

Image to_image(const std::vector<double>& data, int channels, Index size) {
  Image img;
  img.channels = channels;
  img.height = img.width = static_cast<int>(size);
  img.data = data;
  return img;
}

std::string scene_name(std::size_t i, const char* part) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "scene_%05zu_%s.png", i, part);
  return buf;
}

std::map<std::string, std::string> parse_pairs(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("manifest: expected key=value, got '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("manifest: missing key '" + key + "'");
  return it->second;
}

}  // namespace

void write_scene_archive(const std::filesystem::path& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  const auto& c = data.config;
  std::ofstream m(dir / "manifest.txt");
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
  m << "photogeo-scenes 1\n";
  m << "config image_size=" << c.image_size << " pad_factor=" << c.pad_factor << " fov_deg=" << fmt(c.fov_deg)
    << " depth_min=" << fmt(c.depth_min) << " depth_max=" << fmt(c.depth_max) << " bumps_min=" << c.bumps_min
    << " bumps_max=" << c.bumps_max << " yaw_scale=" << fmt(c.yaw_scale) << " pitch_scale=" << fmt(c.pitch_scale)
    << " roll_scale=" << fmt(c.roll_scale) << " translation_scale=" << fmt(c.translation_scale)
    << " light_scale=" << fmt(c.light_scale) << " ambient_min=" << fmt(c.ambient_min)
    << " ambient_max=" << fmt(c.ambient_max) << " diffuse_min=" << fmt(c.diffuse_min)
    << " diffuse_max=" << fmt(c.diffuse_max) << " albedo_contrast=" << fmt(c.albedo_contrast)
    << " silhouette=" << fmt(c.silhouette) << '\n';
  const Index G = c.grid_size();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    write_png(dir / scene_name(i, "image"), to_image(s.image, 3, c.image_size), 16);
    m << "scene index=" << i << " seed=" << s.seed << " image=" << scene_name(i, "image");
    if (s.has_ground_truth) {
      std::vector<double> dn(s.depth.size());
      for (std::size_t j = 0; j < dn.size(); ++j) dn[j] = (s.depth[j] - c.depth_min) / (c.depth_max - c.depth_min);
      write_png(dir / scene_name(i, "depth"), to_image(dn, 1, G), 16);
      write_png(dir / scene_name(i, "albedo"), to_image(s.albedo, 3, G), 16);
      m << " depth=" << scene_name(i, "depth") << " albedo=" << scene_name(i, "albedo") << " pose=";
      for (int j = 0; j < 6; ++j) m << (j ? "," : "") << fmt(s.pose[j]);
      m << " light_x_deg=" << fmt(s.light_x_deg) << " light_y_deg=" << fmt(s.light_y_deg)
        << " ambient=" << fmt(s.ambient) << " diffuse=" << fmt(s.diffuse);
    }
    m << '\n';
  }
  if (!m) throw std::runtime_error("failed writing manifest in " + dir.string());
}

Dataset load_scene_archive(const std::filesystem::path& dir) {
  std::ifstream m(dir / "manifest.txt");
  if (!m) throw std::runtime_error("no manifest.txt in " + dir.string());
  std::string line;
  if (!std::getline(m, line) || line != "photogeo-scenes 1") throw std::runtime_error("unrecognized scene manifest");
  Dataset d;
  while (std::getline(m, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    const auto kv = parse_pairs(ls);
    if (kind == "config") {
      auto& c = d.config;
      c.image_size = std::stoll(require(kv, "image_size"));
      c.pad_factor = std::stoll(require(kv, "pad_factor"));
      c.fov_deg = std::stod(require(kv, "fov_deg"));
      c.depth_min = std::stod(require(kv, "depth_min"));
      c.depth_max = std::stod(require(kv, "depth_max"));
      c.bumps_min = std::stoi(require(kv, "bumps_min"));
      c.bumps_max = std::stoi(require(kv, "bumps_max"));
      c.yaw_scale = std::stod(require(kv, "yaw_scale"));
      c.pitch_scale = std::stod(require(kv, "pitch_scale"));
      c.roll_scale = std::stod(require(kv, "roll_scale"));
      c.translation_scale = std::stod(require(kv, "translation_scale"));
      c.light_scale = std::stod(require(kv, "light_scale"));
      c.ambient_min = std::stod(require(kv, "ambient_min"));
      c.ambient_max = std::stod(require(kv, "ambient_max"));
      c.diffuse_min = std::stod(require(kv, "diffuse_min"));
      c.diffuse_max = std::stod(require(kv, "diffuse_max"));
      c.albedo_contrast = std::stod(require(kv, "albedo_contrast"));
      c.silhouette = std::stod(require(kv, "silhouette"));
    } else if (kind == "scene") {
      const auto& c = d.config;
      SceneSample s;
      s.seed = std::stoull(require(kv, "seed"));
      const auto img = read_png(dir / require(kv, "image"));
      if (img.width != c.image_size || img.height != c.image_size) throw std::runtime_error("scene image has wrong size");
      s.image = img.data;
      s.has_ground_truth = kv.count("depth") > 0;
      if (s.has_ground_truth) {
        const auto dimg = read_png(dir / require(kv, "depth"));
        const auto aimg = read_png(dir / require(kv, "albedo"));
        if (dimg.width != c.grid_size() || aimg.width != c.grid_size()) throw std::runtime_error("scene maps have wrong size");
        s.depth.assign(dimg.data.begin(), dimg.data.begin() + dimg.width * dimg.height);
        for (auto& v : s.depth) v = c.depth_min + v * (c.depth_max - c.depth_min);
        s.albedo = aimg.data;
        std::istringstream ps(require(kv, "pose"));
        std::string item;
        for (int j = 0; j < 6; ++j) {
          if (!std::getline(ps, item, ',')) throw std::runtime_error("manifest: pose needs 6 values");
          s.pose[j] = std::stod(item);
        }
        s.light_x_deg = std::stod(require(kv, "light_x_deg"));
        s.light_y_deg = std::stod(require(kv, "light_y_deg"));
        s.ambient = std::stod(require(kv, "ambient"));
        s.diffuse = std::stod(require(kv, "diffuse"));
      }
      d.samples.push_back(std::move(s));
    } else if (!kind.empty()) {
      throw std::runtime_error("manifest: unknown record '" + kind + "'");
    }
  }
  return d;
}

Dataset load_image_folder(const std::filesystem::path& dir, Index size, std::ostream& warn) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Dataset d;
  d.config.image_size = size;
  for (const auto& f : files) {
    try {
      const auto img = center_square_resize(read_png(f), static_cast<int>(size));
      SceneSample s;
      s.image = img.data;
      for (auto& v : s.image) v = std::clamp(v, 0.0, 1.0);
      s.has_ground_truth = false;
      d.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      warn << "warning: skipping " << f.string() << ": " << e.what() << '\n';
    }
  }
  if (d.samples.empty()) throw std::runtime_error("no decodable images in " + dir.string());
  return d;
}

DatasetSplit split_dataset(std::size_t count, const std::array<double, 3>& ratios, std::uint64_t seed) {
  double total = 0;
  for (const double r : ratios) {
    if (!(r >= 0)) throw std::invalid_argument("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
  const auto part = [&](double r) { return static_cast<std::size_t>(std::floor(r * double(count) + 1e-9)); };
  const std::size_t n_val = part(ratios[1]), n_test = part(ratios[2]);
  if (n_val + n_test >= count || n_val == 0 || n_test == 0) {
    throw std::invalid_argument("split leaves a part with no samples");
  }
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  DatasetSplit s;
  const std::size_t n_train = count - n_val - n_test;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

namespace {

template <typename Scalar, typename Get>
Tensor<Scalar> stack(const Dataset& data, const std::vector<std::size_t>& indices, Shape item, Get get) {
  const Index per = shape_size(item);
  Shape shape{static_cast<Index>(indices.size())};
  shape.insert(shape.end(), item.begin(), item.end());
  Array<Scalar> out(shape_size(shape));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = data.samples.at(indices[b]);
    const std::vector<double>& v = get(s);
    if (static_cast<Index>(v.size()) != per) throw std::runtime_error("sample has unexpected size");
    for (Index i = 0; i < per; ++i) out[static_cast<Index>(b) * per + i] = Scalar(v[static_cast<std::size_t>(i)]);
  }
  return Tensor<Scalar>::from_array(shape, std::move(out));
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> batch_images(const Dataset& data, const std::vector<std::size_t>& indices) {
  const Index S = data.config.image_size;
  return stack<Scalar>(data, indices, {3, S, S}, [](const SceneSample& s) -> const std::vector<double>& { return s.image; });
}

template <typename Scalar>
Tensor<Scalar> batch_depths(const Dataset& data, const std::vector<std::size_t>& indices) {
  const Index G = data.config.grid_size();
  return stack<Scalar>(data, indices, {1, G, G}, [](const SceneSample& s) -> const std::vector<double>& {
    if (!s.has_ground_truth) throw std::runtime_error("sample has no ground-truth depth");
    return s.depth;
  });
}

template <typename Scalar>
Tensor<Scalar> batch_poses(const Dataset& data, const std::vector<std::size_t>& indices) {
  Array<Scalar> out(6 * static_cast<Index>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = data.samples.at(indices[b]);
    if (!s.has_ground_truth) throw std::runtime_error("sample has no ground-truth pose");
    for (int j = 0; j < 6; ++j) out[static_cast<Index>(6 * b) + j] = Scalar(s.pose[j]);
  }
  return Tensor<Scalar>::from_array({static_cast<Index>(indices.size()), 6}, std::move(out));
}

template Tensor<float> batch_images<float>(const Dataset&, const std::vector<std::size_t>&);
template Tensor<double> batch_images<double>(const Dataset&, const std::vector<std::size_t>&);
template Tensor<float> batch_depths<float>(const Dataset&, const std::vector<std::size_t>&);
template Tensor<double> batch_depths<double>(const Dataset&, const std::vector<std::size_t>&);
template Tensor<float> batch_poses<float>(const Dataset&, const std::vector<std::size_t>&);
template Tensor<double> batch_poses<double>(const Dataset&, const std::vector<std::size_t>&);

}  // namespace photogeo
