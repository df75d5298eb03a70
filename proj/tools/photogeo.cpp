#include "photogeo/gradcheck.hpp"
#include "photogeo/image_io.hpp"
#include "photogeo/pipeline.hpp"
#include "photogeo/renderer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace photogeo;

namespace {

struct Global {
  std::optional<std::uint64_t> seed;
  bool deterministic = true;
};

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void add(CLI::App* app) {
    app->add_option("--config", file, "key=value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "override one key (key=value), repeatable");
  }

  TrainConfig resolve(const Global& g) const {
    TrainConfig cfg = file.empty() ? TrainConfig{} : load_config(file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (g.seed) cfg.set("seed", std::to_string(*g.seed));
    cfg.deterministic = g.deterministic;
    cfg.validate();
    return cfg;
  }
};

Image grey(const std::vector<double>& v, Index size, double lo, double hi) {
  Image img;
  img.channels = 1;
  img.height = img.width = static_cast<int>(size);
  img.data.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) img.data[i] = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
  return img;
}

Image rgb(const std::vector<double>& v, Index size) {
  Image img;
  img.channels = 3;
  img.height = img.width = static_cast<int>(size);
  img.data = v;
  for (auto& x : img.data) x = std::clamp(x, 0.0, 1.0);
  return img;
}

std::pair<double, double> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected two comma-separated numbers, got '" + s + "'");
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

std::vector<std::size_t> eval_indices(const Dataset& data, const TrainConfig& cfg, bool all) {
  if (all || data.samples.size() <= cfg.test_count) {
    std::vector<std::size_t> idx(data.samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  return holdout_split(data.samples.size(), cfg.test_count).second;
}

int run_train(const TrainConfig& cfg) {
  const auto data = load_training_data(cfg, std::cerr);
  std::vector<std::size_t> train;
  if (data.samples.size() > cfg.test_count && data.samples.front().has_ground_truth) {
    train = holdout_split(data.samples.size(), cfg.test_count).first;
  } else {
    for (std::size_t i = 0; i < data.samples.size(); ++i) train.push_back(i);
  }
  Decomposer<float> net(cfg.net);
  Trainer trainer(cfg, net);
  std::cout << "training on " << train.size() << " images for " << cfg.iterations << " iterations\n";
  const auto records = trainer.fit(data, train, &std::cout);
  if (!cfg.log.empty()) {
    std::ofstream log(cfg.log);
    log << TrainLogRecord::csv_header() << '\n';
    for (const auto& r : records) log << r.to_csv() << '\n';
    if (!log) throw std::runtime_error("cannot write log " + cfg.log);
  }
  net.save(cfg.checkpoint);
  std::cout << "checkpoint written to " << cfg.checkpoint << '\n';
  return 0;
}

int run_eval(const TrainConfig& cfg, const std::string& checkpoint, const std::string& out, bool all) {
  const auto net = Decomposer<float>::load(checkpoint);
  const auto data = load_training_data(cfg, std::cerr);
  if (data.samples.empty() || !data.samples.front().has_ground_truth) {
    throw std::runtime_error("evaluation needs a dataset with ground-truth depth");
  }
  const auto report = evaluate(net, data, eval_indices(data, cfg, all), cfg.fov_deg);
  report.save(out + ".txt", out + ".csv");
  std::cout << report.to_text();
  return 0;
}

int run_decompose(const TrainConfig& cfg, const std::string& checkpoint, const std::string& image,
                  const std::filesystem::path& out) {
  const auto net = Decomposer<float>::load(checkpoint);
  const auto& nc = net.config();
  const auto f = decompose_image(net, read_png(image));
  const Index G = nc.grid_size();
  std::filesystem::create_directories(out);
  write_png(out / "depth.png", grey(f.depth, G, nc.depth_min, nc.depth_max), 16);
  write_png(out / "albedo.png", rgb(f.albedo, G));
  const auto Kp = intrinsics_from_fov<double>(nc.image_size, nc.image_size, cfg.fov_deg).padded(nc.pad_factor);
  const double pivot = 0.5 * (nc.depth_min + nc.depth_max);
  write_png(out / "reconstruction.png", render_view(f, 0, 0, std::nullopt, Kp, nc.image_size, pivot));
  write_ply(out / "mesh.ply", tessellate(f.depth.data(), Kp));
  std::ofstream txt(out / "factors.txt");
  txt.precision(9);
  txt << "pose=";
  for (int j = 0; j < 6; ++j) txt << (j ? "," : "") << f.pose[j];
  txt << "\nlight_x_deg=" << f.light_x_deg << "\nlight_y_deg=" << f.light_y_deg << "\nambient=" << f.ambient
      << "\ndiffuse=" << f.diffuse << '\n';
  std::cout << "factors written to " << out << '\n';
  return 0;
}

int run_render(const TrainConfig& cfg, const std::string& checkpoint, const std::string& image,
               const std::vector<std::string>& view_args, const std::vector<std::string>& light_args,
               const std::filesystem::path& out) {
  const auto net = Decomposer<float>::load(checkpoint);
  std::vector<std::pair<double, double>> views, lights;
  for (const auto& v : view_args) views.push_back(parse_pair(v));
  for (const auto& l : light_args) lights.push_back(parse_pair(l));
  if (views.empty() && lights.empty()) views.emplace_back(0, 0);
  std::vector<bool> empty;
  const auto images = render_views(net, read_png(image), views, lights, cfg.fov_deg, &empty);
  std::filesystem::create_directories(out);
  for (std::size_t i = 0; i < images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, i < views.size() ? "view_%02zu.png" : "light_%02zu.png",
                  i < views.size() ? i : i - views.size());
    write_png(out / name, images[i]);
    if (empty[i]) std::cerr << "warning: " << name << " has zero coverage\n";
  }
  std::cout << images.size() << " images written to " << out << '\n';
  return 0;
}

int run_gen_synth(const TrainConfig& cfg, std::size_t count, std::uint64_t seed, const std::filesystem::path& out) {
  write_scene_archive(out, generate_dataset(seed, count, cfg.scene));
  std::cout << count << " scenes written to " << out << '\n';
  return 0;
}

int run_gradcheck(Index size, int probes, std::uint64_t seed) {
  const auto checks = run_primitive_checks(size, probes, seed);
  std::cout << format_check_table(checks);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  std::cout << (ok ? "all gradient checks passed\n" : "gradient checks FAILED\n");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised depth, albedo, viewpoint and light decomposition of symmetric objects"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "seed for initialization, sampling and flips");
  app.add_flag("--deterministic,!--no-deterministic", g.deterministic, "single-stream, bit-reproducible execution");

  ConfigArgs train_cfg, eval_cfg, dec_cfg, render_cfg, gen_cfg;
  auto* train = app.add_subcommand("train", "train a decomposition network");
  train_cfg.add(train);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint against ground-truth depth");
  eval_cfg.add(ev);
  std::string eval_ckpt, eval_out = "report";
  bool eval_all = false;
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "output prefix for <out>.txt and <out>.csv");
  ev->add_flag("--all", eval_all, "evaluate every sample instead of the held-out tail");

  auto* dec = app.add_subcommand("decompose", "write the factors of one image");
  dec_cfg.add(dec);
  std::string dec_ckpt, dec_image, dec_out = "decomposition";
  dec->add_option("--checkpoint", dec_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  dec->add_option("--image", dec_image, "input PNG")->required()->check(CLI::ExistingFile);
  dec->add_option("--out", dec_out, "output directory");

  auto* render = app.add_subcommand("render", "re-render one image from new viewpoints and lights");
  render_cfg.add(render);
  std::string ren_ckpt, ren_image, ren_out = "views";
  std::vector<std::string> ren_views, ren_lights;
  render->add_option("--checkpoint", ren_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  render->add_option("--image", ren_image, "input PNG")->required()->check(CLI::ExistingFile);
  render->add_option("--view", ren_views, "yaw,pitch in degrees, repeatable");
  render->add_option("--light", ren_lights, "light x,y angles in degrees, repeatable");
  render->add_option("--out", ren_out, "output directory");

  auto* gen = app.add_subcommand("gen-synth", "write a synthetic scene archive");
  gen_cfg.add(gen);
  std::size_t gen_count = 100;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--count", gen_count, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output directory")->required();

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every differentiable primitive");
  Index gc_size = 8;
  int gc_probes = 20;
  gc->add_option("--size", gc_size, "spatial size of the probes");
  gc->add_option("--probes", gc_probes, "random probes per primitive")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*train) return run_train(train_cfg.resolve(g));
    if (*ev) return run_eval(eval_cfg.resolve(g), eval_ckpt, eval_out, eval_all);
    if (*dec) return run_decompose(dec_cfg.resolve(g), dec_ckpt, dec_image, dec_out);
    if (*render) return run_render(render_cfg.resolve(g), ren_ckpt, ren_image, ren_views, ren_lights, ren_out);
    if (*gen) {
      const auto cfg = gen_cfg.resolve(g);
      gen_seed = g.seed.value_or(cfg.synth_seed);
      return run_gen_synth(cfg, gen_count, gen_seed, gen_out);
    }
    if (*gc) return run_gradcheck(gc_size, gc_probes, g.seed.value_or(1));
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
