#include "photogeo/pipeline.hpp"

#include "photogeo/ops.hpp"
#include "photogeo/photometric.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace photogeo {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(flip_prob >= 0 && flip_prob <= 1)) throw std::invalid_argument("flip_prob must lie in [0, 1]");
  if (weights.lambda1 < 0 || weights.lambda_perc < 0 || weights.lambda_d < 0 || weights.lambda_vp < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
  if (!(fov_deg > 0 && fov_deg < 180)) throw std::invalid_argument("fov_deg must lie in (0, 180)");
  if (log_every < 1) throw std::invalid_argument("log_every must be positive");
  net.validate();
  if (scene.image_size != net.image_size || scene.pad_factor != net.pad_factor) {
    throw std::invalid_argument("scene and network grid sizes differ");
  }
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  auto num = [&v] { return std::stod(v); };
  auto integer = [&v] { return static_cast<Index>(std::stoll(v)); };
  auto u64 = [&v] { return static_cast<std::uint64_t>(std::stoull(v)); };
  if (key == "data") data = v;
  else if (key == "synth_count") synth_count = static_cast<std::size_t>(u64());
  else if (key == "synth_seed") synth_seed = u64();
  else if (key == "test_count") test_count = static_cast<std::size_t>(u64());
  else if (key == "batch_size") batch_size = integer();
  else if (key == "iterations") iterations = integer();
  else if (key == "lambda1") weights.lambda1 = num();
  else if (key == "lambda_perc") weights.lambda_perc = num();
  else if (key == "lambda_d") weights.lambda_d = num();
  else if (key == "lambda_vp") weights.lambda_vp = num();
  else if (key == "lr") lr = num();
  else if (key == "beta1") beta1 = num();
  else if (key == "beta2") beta2 = num();
  else if (key == "eps") eps = num();
  else if (key == "flip_prob") flip_prob = num();
  else if (key == "fov_deg") fov_deg = scene.fov_deg = num();
  else if (key == "seed") seed = net.seed = u64();
  else if (key == "perceptual_seed") perceptual_seed = u64();
  else if (key == "deterministic") deterministic = parse_bool(v);
  else if (key == "log_every") log_every = integer();
  else if (key == "checkpoint") checkpoint = v;
  else if (key == "log") log = v;
  else if (key == "image_size") net.image_size = scene.image_size = integer();
  else if (key == "pad_factor") net.pad_factor = scene.pad_factor = integer();
  else if (key == "depth_min") net.depth_min = scene.depth_min = num();
  else if (key == "depth_max") net.depth_max = scene.depth_max = num();
  else if (key == "channels" || key == "pose_channels" || key == "zdim" || key == "dense_albedo" ||
           key == "rotation_range_deg" || key == "translation_range" || key == "light_angle_range_deg" || key == "head_init" ||
           key == "pivot_rotation") {
    auto m = net.to_map();
    m[key] = key == "dense_albedo" || key == "pivot_rotation" ? (parse_bool(v) ? "1" : "0") : v;
    const auto seed_keep = net.seed;
    net = NetConfig::from_map(m);
    net.seed = seed_keep;
  } else if (key.rfind("scene.", 0) == 0) {
    const std::string k = key.substr(6);
    if (k == "bumps_min") scene.bumps_min = std::stoi(v);
    else if (k == "bumps_max") scene.bumps_max = std::stoi(v);
    else if (k == "yaw_scale") scene.yaw_scale = num();
    else if (k == "pitch_scale") scene.pitch_scale = num();
    else if (k == "roll_scale") scene.roll_scale = num();
    else if (k == "translation_scale") scene.translation_scale = num();
    else if (k == "light_scale") scene.light_scale = num();
    else if (k == "ambient_min") scene.ambient_min = num();
    else if (k == "ambient_max") scene.ambient_max = num();
    else if (k == "diffuse_min") scene.diffuse_min = num();
    else if (k == "diffuse_max") scene.diffuse_max = num();
    else if (k == "albedo_contrast") scene.albedo_contrast = num();
    else if (k == "silhouette") scene.silhouette = num();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m = net.to_map();
  m.erase("seed");
  m["data"] = data;
  m["synth_count"] = std::to_string(synth_count);
  m["synth_seed"] = std::to_string(synth_seed);
  m["test_count"] = std::to_string(test_count);
  m["batch_size"] = std::to_string(batch_size);
  m["iterations"] = std::to_string(iterations);
  m["lambda1"] = fmt(weights.lambda1);
  m["lambda_perc"] = fmt(weights.lambda_perc);
  m["lambda_d"] = fmt(weights.lambda_d);
  m["lambda_vp"] = fmt(weights.lambda_vp);
  m["lr"] = fmt(lr);
  m["beta1"] = fmt(beta1);
  m["beta2"] = fmt(beta2);
  m["eps"] = fmt(eps);
  m["flip_prob"] = fmt(flip_prob);
  m["fov_deg"] = fmt(fov_deg);
  m["seed"] = std::to_string(seed);
  m["perceptual_seed"] = std::to_string(perceptual_seed);
  m["deterministic"] = deterministic ? "1" : "0";
  m["log_every"] = std::to_string(log_every);
  m["checkpoint"] = checkpoint;
  m["log"] = log;
  m["scene.bumps_min"] = std::to_string(scene.bumps_min);
  m["scene.bumps_max"] = std::to_string(scene.bumps_max);
  m["scene.yaw_scale"] = fmt(scene.yaw_scale);
  m["scene.pitch_scale"] = fmt(scene.pitch_scale);
  m["scene.roll_scale"] = fmt(scene.roll_scale);
  m["scene.translation_scale"] = fmt(scene.translation_scale);
  m["scene.light_scale"] = fmt(scene.light_scale);
  m["scene.ambient_min"] = fmt(scene.ambient_min);
  m["scene.ambient_max"] = fmt(scene.ambient_max);
  m["scene.diffuse_min"] = fmt(scene.diffuse_min);
  m["scene.diffuse_max"] = fmt(scene.diffuse_max);
  m["scene.albedo_contrast"] = fmt(scene.albedo_contrast);
  m["scene.silhouette"] = fmt(scene.silhouette);
  return m;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(n) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  TrainConfig cfg;
  for (const auto& [k, v] : parse_config_text(ss.str())) cfg.set(k, v);
  return cfg;
}

std::string TrainLogRecord::to_line() const {
  std::ostringstream os;
  os << std::setprecision(8) << "iter=" << iteration << " l1=" << l1 << " perc=" << perceptual
     << " depth=" << depth_pair << " vp=" << viewpoint << " objective=" << objective
     << " degenerate=" << degenerate << " skipped=" << (skipped ? 1 : 0) << " time=" << std::setprecision(4)
     << wall_seconds;
  return os.str();
}

std::string TrainLogRecord::csv_header() {
  return "iteration,l1,perceptual,depth_pair,viewpoint,objective,degenerate,skipped,wall_seconds";
}

std::string TrainLogRecord::to_csv() const {
  std::ostringstream os;
  os << iteration << ',' << fmt(l1) << ',' << fmt(perceptual) << ',' << fmt(depth_pair) << ','
     << fmt(viewpoint) << ',' << fmt(objective) << ',' << degenerate << ',' << (skipped ? 1 : 0) << ','
     << wall_seconds;
  return os.str();
}

template <typename Scalar>
Reconstruction<Scalar> reconstruct(const Decomposition<Scalar>& dec, const std::vector<bool>& flips,
                                   const Intrinsics<Scalar>& padded_K, Index image_size) {
  Reconstruction<Scalar> r;
  const auto depth = hflip_samples(dec.depth, flips);
  const auto albedo = hflip_samples(dec.albedo, flips);
  const auto normals = normals_from_depth(depth, padded_K).normals;
  r.canonical = shade(albedo, normals, light_direction(dec.light_angles), dec.ambient, dec.diffuse);
  auto proj = reproject(r.canonical, depth, dec.pose, padded_K, image_size, image_size);
  r.image = proj.image;
  r.depth = depth;
  r.degenerate = proj.rendered.degenerate;
  return r;
}

template Reconstruction<float> reconstruct(const Decomposition<float>&, const std::vector<bool>&,
                                           const Intrinsics<float>&, Index);
template Reconstruction<double> reconstruct(const Decomposition<double>&, const std::vector<bool>&,
                                            const Intrinsics<double>&, Index);

Trainer::Trainer(const TrainConfig& cfg, Decomposer<float>& net)
    : cfg_(cfg),
      net_(net),
      adam_(net.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps),
      encoder_(cfg.perceptual_seed),
      padded_K_(intrinsics_from_fov<float>(cfg.net.image_size, cfg.net.image_size, float(cfg.fov_deg))
                    .padded(cfg.net.pad_factor)),
      rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL),
      start_(std::chrono::steady_clock::now()) {
  cfg_.validate();
}

TrainLogRecord Trainer::run(const Tensor<float>& images, const std::vector<bool>& flips, bool update) {
  TrainLogRecord rec;
  rec.iteration = iteration_;
  const auto dec = net_(images);
  const auto r = reconstruct(dec, flips, padded_K_, cfg_.net.image_size);
  std::vector<float> keep(r.degenerate.size(), 1.0f);
  for (std::size_t b = 0; b < keep.size(); ++b) {
    if (r.degenerate[b]) {
      keep[b] = 0.0f;
      ++rec.degenerate;
    }
  }
  Tensor<float> out = r.image, target = images;
  if (rec.degenerate > 0) {
    out = scale_samples(out, keep);
    target = scale_samples(target, keep);
  }
  const auto terms = objective(out, target, dec.depth, dec.pose, cfg_.weights,
                               cfg_.weights.lambda_perc > 0 ? &encoder_ : nullptr);
  rec.l1 = terms.l1.item();
  rec.perceptual = terms.perceptual.item();
  rec.depth_pair = terms.depth_pair.item();
  rec.viewpoint = terms.viewpoint.item();
  rec.objective = terms.total.item();
  if (update) {
    bool ok = std::isfinite(rec.objective);
    if (ok) {
      adam_.zero_grad();
      backward(terms.total);
      ok = adam_.step();
    }
    rec.skipped = !ok;
    consecutive_skips_ = ok ? 0 : consecutive_skips_ + 1;
    if (consecutive_skips_ >= 3) {
      throw std::runtime_error("training aborted: 3 consecutive non-finite steps (last: " + rec.to_line() + ")");
    }
    ++iteration_;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return rec;
}

TrainLogRecord Trainer::step(const Tensor<float>& images) {
  std::bernoulli_distribution coin(cfg_.flip_prob);
  std::vector<bool> flips(static_cast<std::size_t>(images.dim(0)));
  for (std::size_t b = 0; b < flips.size(); ++b) flips[b] = coin(rng_);
  return run(images, flips, true);
}

TrainLogRecord Trainer::measure(const Tensor<float>& images, const std::vector<bool>& flips) {
  return run(images, flips, false);
}

std::vector<TrainLogRecord> Trainer::fit(const Dataset& data, const std::vector<std::size_t>& train,
                                         std::ostream* log) {
  if (static_cast<Index>(train.size()) < cfg_.batch_size) {
    throw std::invalid_argument("training set smaller than one batch");
  }
  std::vector<std::size_t> order = train;
  std::size_t pos = order.size();
  std::vector<TrainLogRecord> records;
  for (Index it = 0; it < cfg_.iterations; ++it) {
    std::vector<std::size_t> batch;
    for (Index b = 0; b < cfg_.batch_size; ++b) {
      if (pos == order.size()) {
        std::shuffle(order.begin(), order.end(), rng_);
        pos = 0;
      }
      batch.push_back(order[pos++]);
    }
    const auto rec = step(batch_images<float>(data, batch));
    records.push_back(rec);
    if (log && (it % cfg_.log_every == 0 || it + 1 == cfg_.iterations || rec.skipped)) {
      *log << rec.to_line() << std::endl;
    }
  }
  return records;
}

Predictions predict(const Decomposer<float>& net, const Dataset& data,
                    const std::vector<std::size_t>& indices, double fov_deg, Index chunk) {
  const auto& nc = net.config();
  if (data.config.image_size != nc.image_size) throw std::invalid_argument("predict: image size mismatch");
  const auto Kp = intrinsics_from_fov<float>(nc.image_size, nc.image_size, float(fov_deg)).padded(nc.pad_factor);
  Predictions p;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(chunk)) {
    const std::vector<std::size_t> part(indices.begin() + static_cast<std::ptrdiff_t>(start),
                                        indices.begin() + static_cast<std::ptrdiff_t>(
                                            std::min(indices.size(), start + static_cast<std::size_t>(chunk))));
    const auto dec = net(batch_images<float>(data, part));
    const auto rec = reconstruct(dec, std::vector<bool>(part.size(), false), Kp, nc.image_size);
    const Index G = dec.depth.dim(2) * dec.depth.dim(3);
    const Index P = rec.image.size() / static_cast<Index>(part.size());
    for (std::size_t b = 0; b < part.size(); ++b) {
      const auto bi = static_cast<Index>(b);
      p.depth.emplace_back(dec.depth.value().data() + bi * G, dec.depth.value().data() + (bi + 1) * G);
      Vector6<double> w;
      for (int j = 0; j < 6; ++j) w[j] = dec.pose.value()[6 * bi + j];
      p.pose.push_back(w);
      p.reconstruction.emplace_back(rec.image.value().data() + bi * P, rec.image.value().data() + (bi + 1) * P);
    }
  }
  return p;
}

Predictions oracle_predictions(const Dataset& data, const std::vector<std::size_t>& indices) {
  Predictions p;
  for (const auto i : indices) {
    const auto& s = data.samples.at(i);
    if (!s.has_ground_truth) throw std::invalid_argument("oracle predictions need ground truth");
    p.depth.push_back(s.depth);
    p.pose.push_back(s.pose);
    p.reconstruction.push_back(s.image);
  }
  return p;
}

namespace {

struct ActualView {
  std::vector<double> depth;           // cropped, hole-filled
  std::vector<std::uint8_t> coverage;  // cropped
};

ActualView actual_view(const std::vector<double>& depth, const Vector6<double>& pose,
                       const Intrinsics<double>& Kp, Index S) {
  const Index G = Kp.width;
  const auto rd = rasterize_depth(Tensor<double>::from_vector({1, 1, G, G}, depth),
                                  Tensor<double>::from_vector({1, 6}, std::vector<double>(pose.data(), pose.data() + 6)),
                                  Kp);
  const Index o = (G - S) / 2;
  ActualView v;
  v.depth.reserve(static_cast<std::size_t>(S * S));
  v.coverage.reserve(static_cast<std::size_t>(S * S));
  for (Index y = 0; y < S; ++y) {
    for (Index x = 0; x < S; ++x) {
      const Index i = (y + o) * G + x + o;
      v.depth.push_back(rd.depth.value()[i]);
      v.coverage.push_back(rd.coverage[static_cast<std::size_t>(i)]);
    }
  }
  return v;
}

}  // namespace

MetricReport evaluate_predictions(const Dataset& data, const std::vector<std::size_t>& indices,
                                  const Predictions& pred, double fov_deg) {
  if (pred.depth.size() != indices.size() || pred.pose.size() != indices.size()) {
    throw std::invalid_argument("evaluate: prediction count does not match the index list");
  }
  const Index S = data.config.image_size;
  const auto K = intrinsics_from_fov<double>(S, S, fov_deg);
  const auto Kp = K.padded(data.config.pad_factor);
  const double mid = 0.5 * (data.config.depth_min + data.config.depth_max);
  MetricReport report;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& s = data.samples.at(indices[k]);
    if (!s.has_ground_truth) throw std::invalid_argument("evaluate: sample without ground-truth depth");
    const auto gt = actual_view(s.depth, s.pose, Kp, S);
    const auto pv = actual_view(pred.depth[k], pred.pose[k], Kp, S);
    std::vector<std::uint8_t> mask(gt.coverage.size());
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) n += (mask[i] = gt.coverage[i] && pv.coverage[i]);
    ImageMetrics m;
    m.index = static_cast<Index>(indices[k]);
    if (n >= 3) {
      m.si_error = si_error(pv.depth, gt.depth, mask);
      m.normal_error_deg = normal_angle_error(pv.depth, gt.depth, K, mask);
      m.pearson = pearson(pv.depth, gt.depth, mask);
      m.baseline_si_error = si_error(std::vector<double>(gt.depth.size(), mid), gt.depth, mask);
    } else {
      m.si_error = m.normal_error_deg = m.baseline_si_error = std::numeric_limits<double>::quiet_NaN();
      m.pearson = 0;
    }
    if (k < pred.reconstruction.size() && !pred.reconstruction[k].empty()) {
      double acc = 0;
      for (std::size_t i = 0; i < s.image.size(); ++i) acc += std::abs(pred.reconstruction[k][i] - s.image[i]);
      m.recon_l1 = acc / double(s.image.size());
    }
    report.per_image.push_back(m);
  }
  report.aggregate();
  return report;
}

MetricReport evaluate(const Decomposer<float>& net, const Dataset& data,
                      const std::vector<std::size_t>& indices, double fov_deg) {
  return evaluate_predictions(data, indices, predict(net, data, indices, fov_deg), fov_deg);
}

SceneFactors decompose_image(const Decomposer<float>& net, const Image& image) {
  const Index S = net.config().image_size;
  Image in = image;
  if (in.width != S || in.height != S) in = center_square_resize(image, static_cast<int>(S));
  if (in.channels != 3) throw std::invalid_argument("decompose: expected an RGB image");
  const auto x = Tensor<float>::from_array(
      {1, 3, S, S}, Eigen::Map<const Eigen::ArrayXd>(in.data.data(), static_cast<Index>(in.data.size())).cast<float>());
  const auto dec = net(x);
  SceneFactors f;
  f.depth.assign(dec.depth.value().data(), dec.depth.value().data() + dec.depth.size());
  f.albedo.assign(dec.albedo.value().data(), dec.albedo.value().data() + dec.albedo.size());
  for (int j = 0; j < 6; ++j) f.pose[j] = dec.pose.value()[j];
  f.light_x_deg = dec.light_angles.value()[0];
  f.light_y_deg = dec.light_angles.value()[1];
  f.ambient = dec.ambient.value()[0];
  f.diffuse = dec.diffuse.value()[0];
  return f;
}

Image render_view(const SceneFactors& f, double yaw_deg, double pitch_deg,
                  std::optional<std::pair<double, double>> light_deg, const Intrinsics<double>& Kp,
                  Index image_size, double pivot_depth, bool* zero_coverage) {
  if (std::abs(yaw_deg) > 90 || std::abs(pitch_deg) > 90) throw std::invalid_argument("view angles must lie within 90 degrees");
  const Index G = Kp.width;
  const auto [Rp, Tp] = se3_exp<double>(f.pose);
  const Eigen::Matrix3d Rv = (Eigen::AngleAxisd(yaw_deg * kDeg, Eigen::Vector3d::UnitY()) *
                              Eigen::AngleAxisd(pitch_deg * kDeg, Eigen::Vector3d::UnitX()))
                                 .toRotationMatrix();
  const Eigen::Vector3d c(0, 0, pivot_depth);
  const Eigen::Matrix3d R = Rv * Rp;
  const Eigen::AngleAxisd aa(R);
  Vector6<double> w;
  w.head<3>() = aa.angle() * aa.axis();
  w.tail<3>() = Rv * (Tp - c) + c;
  const auto [lx, ly] = light_deg.value_or(std::make_pair(f.light_x_deg, f.light_y_deg));

  const auto depth = Tensor<double>::from_vector({1, 1, G, G}, f.depth);
  const auto albedo = Tensor<double>::from_vector({1, 3, G, G}, f.albedo);
  const auto normals = normals_from_depth(depth, Kp).normals;
  const auto canonical = shade(albedo, normals, light_direction(Tensor<double>::from_vector({1, 2}, {lx, ly})),
                               Tensor<double>::from_vector({1}, {f.ambient}),
                               Tensor<double>::from_vector({1}, {f.diffuse}));
  const auto rec = reproject(canonical, depth, Tensor<double>::from_vector({1, 6}, std::vector<double>(w.data(), w.data() + 6)),
                             Kp, image_size, image_size);
  if (zero_coverage) *zero_coverage = rec.degenerate_samples > 0;
  Image img;
  img.channels = 3;
  img.height = img.width = static_cast<int>(image_size);
  img.data.assign(rec.image.value().data(), rec.image.value().data() + rec.image.size());
  return img;
}

std::vector<Image> render_views(const Decomposer<float>& net, const Image& image,
                                const std::vector<std::pair<double, double>>& views,
                                const std::vector<std::pair<double, double>>& lights, double fov_deg,
                                std::vector<bool>* zero_coverage) {
  const auto& nc = net.config();
  const auto f = decompose_image(net, image);
  const auto Kp = intrinsics_from_fov<double>(nc.image_size, nc.image_size, fov_deg).padded(nc.pad_factor);
  const double pivot = 0.5 * (nc.depth_min + nc.depth_max);
  std::vector<Image> out;
  auto emit = [&](double yaw, double pitch, std::optional<std::pair<double, double>> light) {
    bool empty = false;
    out.push_back(render_view(f, yaw, pitch, light, Kp, nc.image_size, pivot, &empty));
    if (zero_coverage) zero_coverage->push_back(empty);
  };
  for (const auto& [yaw, pitch] : views) emit(yaw, pitch, std::nullopt);
  for (const auto& l : lights) emit(0, 0, l);
  return out;
}

Dataset load_training_data(const TrainConfig& cfg, std::ostream& warn) {
  if (cfg.data.empty()) return generate_dataset(cfg.synth_seed, cfg.synth_count, cfg.scene);
  if (std::filesystem::exists(std::filesystem::path(cfg.data) / "manifest.txt")) {
    auto d = load_scene_archive(cfg.data);
    if (d.config.image_size != cfg.net.image_size || d.config.pad_factor != cfg.net.pad_factor) {
      throw std::runtime_error("scene archive grid does not match the network configuration");
    }
    return d;
  }
  auto d = load_image_folder(cfg.data, cfg.net.image_size, warn);
  d.config = cfg.scene;
  return d;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t count,
                                                                            std::size_t test_count) {
  if (test_count >= count) throw std::invalid_argument("test_count leaves no training samples");
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> s;
  for (std::size_t i = 0; i < count; ++i) (i < count - test_count ? s.first : s.second).push_back(i);
  return s;
}

}  // namespace photogeo
