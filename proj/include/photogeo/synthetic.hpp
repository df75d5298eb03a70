#pragma once

#include "photogeo/camera.hpp"
#include "photogeo/image_io.hpp"
#include "photogeo/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace photogeo {

/// Generator settings. Pose and light ranges are fractions of the full
/// output ranges (rotation 60 deg, translation 0.1, light 60 deg).
/// Rotations are taken about the object center (0, 0, mid-depth) and then
/// rewritten as a camera-centered pose.
struct SceneConfig {
  Index image_size = 32;
  Index pad_factor = 2;
  double fov_deg = 25;
  double depth_min = 0.4;
  double depth_max = 0.6;
  int bumps_min = 2;
  int bumps_max = 6;
  double yaw_scale = 0.15;
  double pitch_scale = 0.1;
  double roll_scale = 0.05;
  double translation_scale = 0.1;
  double light_scale = 0.5;
  double ambient_min = 0.2;
  double ambient_max = 0.5;
  double diffuse_min = 0.4;
  double diffuse_max = 0.8;
  double albedo_contrast = 1.0;  // scales the albedo blob amplitude
  double silhouette = 0;         // half-width of an elliptical object mask in visible units; 0 = none

  Index grid_size() const { return pad_factor * image_size; }
  /// Intrinsics of the visible image_size grid.
  Intrinsics<double> intrinsics() const;
  /// Same focal length on the padded grid.
  Intrinsics<double> padded_intrinsics() const;
};

/// Ground-truthed scene. Maps are channel-major; depth and albedo live on the
/// padded grid, the image on the visible grid.
struct SceneSample {
  std::vector<double> image;   // 3 x S x S
  std::vector<double> depth;   // G x G
  std::vector<double> albedo;  // 3 x G x G
  Vector6<double> pose = Vector6<double>::Zero();
  double light_x_deg = 0;
  double light_y_deg = 0;
  double ambient = 0;
  double diffuse = 0;
  std::uint64_t seed = 0;
  bool has_ground_truth = true;
};

SceneSample generate_scene(std::uint64_t seed, const SceneConfig& cfg);

/// Renders image from the ground-truth factors of `sample` (the generator's
/// own forward pass).
std::vector<double> render_scene(const SceneSample& sample, const SceneConfig& cfg);

struct Dataset {
  SceneConfig config;
  std::vector<SceneSample> samples;
};

/// Samples seed, seed + 1, ... seed + count - 1.
Dataset generate_dataset(std::uint64_t seed, std::size_t count, const SceneConfig& cfg);

/// Directory of scene_XXXXX_{image,depth,albedo}.png files plus manifest.txt
/// holding the generator config and one "scene" line of key=value factors
/// per sample. Images and albedo are 16-bit RGB; depth is 16-bit gray
/// mapped linearly from [depth_min, depth_max].
void write_scene_archive(const std::filesystem::path& dir, const Dataset& data);
Dataset load_scene_archive(const std::filesystem::path& dir);

/// PNG files of a folder in lexicographic order, center-cropped and resized
/// to size x size. Undecodable files are skipped with a warning on `warn`.
Dataset load_image_folder(const std::filesystem::path& dir, Index size, std::ostream& warn);

struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then contiguous parts of floor(ratio * n) samples; the
/// remainder goes to train. Every part must end up non-empty.
DatasetSplit split_dataset(std::size_t count, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Stacks the listed samples into tensors.
template <typename Scalar>
Tensor<Scalar> batch_images(const Dataset& data, const std::vector<std::size_t>& indices);
template <typename Scalar>
Tensor<Scalar> batch_depths(const Dataset& data, const std::vector<std::size_t>& indices);
template <typename Scalar>
Tensor<Scalar> batch_poses(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace photogeo
