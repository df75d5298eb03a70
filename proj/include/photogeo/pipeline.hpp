#pragma once

#include "photogeo/image_io.hpp"
#include "photogeo/losses.hpp"
#include "photogeo/metrics.hpp"
#include "photogeo/networks.hpp"
#include "photogeo/optim.hpp"
#include "photogeo/renderer.hpp"
#include "photogeo/synthetic.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace photogeo {

struct TrainConfig {
  std::string data;                 // scene archive or image folder; empty = generate
  std::size_t synth_count = 500;
  std::uint64_t synth_seed = 1000;
  std::size_t test_count = 100;     // trailing samples held out for evaluation
  Index batch_size = 16;
  Index iterations = 2000;
  LossWeights weights;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double flip_prob = 0.5;
  double fov_deg = 25;
  std::uint64_t seed = 0;
  std::uint64_t perceptual_seed = 7;
  bool deterministic = true;
  Index log_every = 50;
  std::string checkpoint = "photogeo.ckpt";
  std::string log;                  // text log path; empty = none
  NetConfig net;
  SceneConfig scene;

  void validate() const;
  /// Applies key=value settings; unknown keys throw std::invalid_argument.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

/// key=value lines, '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

struct TrainLogRecord {
  Index iteration = 0;
  double l1 = 0;
  double perceptual = 0;
  double depth_pair = 0;
  double viewpoint = 0;
  double objective = 0;
  Index degenerate = 0;
  bool skipped = false;
  double wall_seconds = 0;

  /// iter=.. l1=.. perc=.. depth=.. vp=.. objective=.. degenerate=.. skipped=.. time=..
  std::string to_line() const;
  static std::string csv_header();
  std::string to_csv() const;
};

/// Forward model on a decomposition: optional per-sample flip of depth and
/// albedo, normals, shading, reprojection and crop.
template <typename Scalar>
struct Reconstruction {
  Tensor<Scalar> image;       // [B, 3, S, S]
  Tensor<Scalar> canonical;   // shaded canonical image on the padded grid
  Tensor<Scalar> depth;       // depth after flipping
  std::vector<std::uint8_t> degenerate;
};

template <typename Scalar>
Reconstruction<Scalar> reconstruct(const Decomposition<Scalar>& dec, const std::vector<bool>& flips,
                                   const Intrinsics<Scalar>& padded_K, Index image_size);

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, Decomposer<float>& net);

  /// One optimization step on images [B, 3, S, S].
  TrainLogRecord step(const Tensor<float>& images);
  /// Objective terms without updating (flips drawn as in training).
  TrainLogRecord measure(const Tensor<float>& images, const std::vector<bool>& flips);

  /// Runs cfg.iterations steps drawing batches from `train` (indices into
  /// data). Log lines go to `log` every log_every steps.
  std::vector<TrainLogRecord> fit(const Dataset& data, const std::vector<std::size_t>& train,
                                  std::ostream* log);

  Index iteration() const { return iteration_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  TrainLogRecord run(const Tensor<float>& images, const std::vector<bool>& flips, bool update);

  TrainConfig cfg_;
  Decomposer<float>& net_;
  Adam<float> adam_;
  RandomConvEncoder<float> encoder_;
  Intrinsics<float> padded_K_;
  std::mt19937_64 rng_;
  Index iteration_ = 0;
  int consecutive_skips_ = 0;
  std::chrono::steady_clock::time_point start_;
};

/// Per-image canonical depth and pose predictions on the padded grid.
struct Predictions {
  std::vector<std::vector<double>> depth;   // G x G each
  std::vector<Vector6<double>> pose;
  std::vector<std::vector<double>> reconstruction;  // 3 x S x S each, may be empty
};

Predictions predict(const Decomposer<float>& net, const Dataset& data,
                    const std::vector<std::size_t>& indices, double fov_deg, Index chunk = 25);

/// Ground-truth factors as predictions (self-consistency check).
Predictions oracle_predictions(const Dataset& data, const std::vector<std::size_t>& indices);

/// Actual-view comparison: both depth maps are rasterized into the view of
/// their own pose, cropped to the visible grid and compared where both are
/// covered. The baseline predicts the constant mid-range depth.
MetricReport evaluate_predictions(const Dataset& data, const std::vector<std::size_t>& indices,
                                  const Predictions& pred, double fov_deg);

MetricReport evaluate(const Decomposer<float>& net, const Dataset& data,
                      const std::vector<std::size_t>& indices, double fov_deg);

/// Factors of a single image for re-rendering.
struct SceneFactors {
  std::vector<double> depth, albedo;    // padded grid
  Vector6<double> pose = Vector6<double>::Zero();
  double light_x_deg = 0, light_y_deg = 0, ambient = 0, diffuse = 0;
};

SceneFactors decompose_image(const Decomposer<float>& net, const Image& image);

/// Re-renders the factors after an extra rotation about the object center
/// (yaw about y, pitch about x, degrees) applied on top of the factor pose,
/// optionally with another light direction. `zero_coverage` is set when
/// nothing is visible.
Image render_view(const SceneFactors& f, double yaw_deg, double pitch_deg,
                  std::optional<std::pair<double, double>> light_deg, const Intrinsics<double>& padded_K,
                  Index image_size, double pivot_depth, bool* zero_coverage = nullptr);

/// One image per pose (original light), then one per light (original pose).
std::vector<Image> render_views(const Decomposer<float>& net, const Image& image,
                                const std::vector<std::pair<double, double>>& views,
                                const std::vector<std::pair<double, double>>& lights, double fov_deg = 25.0,
                                std::vector<bool>* zero_coverage = nullptr);

/// Generated or loaded dataset according to cfg.data / synth settings.
Dataset load_training_data(const TrainConfig& cfg, std::ostream& warn);

/// Leading samples for training, trailing cfg.test_count for evaluation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_split(std::size_t count,
                                                                            std::size_t test_count);

}  // namespace photogeo
