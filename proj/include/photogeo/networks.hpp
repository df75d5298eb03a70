#pragma once

#include "photogeo/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace photogeo {

struct NetConfig {
  Index image_size = 32;
  Index pad_factor = 2;                           // depth and albedo grid = pad_factor * image_size
  std::vector<Index> channels = {8, 16, 32, 64};  // encoder-decoder stage widths
  std::vector<Index> pose_channels = {16, 32, 64};
  Index zdim = 128;
  bool dense_albedo = false;                      // dense blocks in the albedo decoder
  double depth_min = 0.4;
  double depth_max = 0.6;
  double rotation_range_deg = 60;
  double translation_range = 0.1;
  double light_angle_range_deg = 60;
  double head_init = 0.1;                         // output layer init scale; 0 = exact range centers
  bool pivot_rotation = true;                     // rotate about the middle of the depth range
  std::uint64_t seed = 0;

  Index grid_size() const { return pad_factor * image_size; }
  void validate() const;
  /// key=value pairs; inverse of from_map.
  std::map<std::string, std::string> to_map() const;
  static NetConfig from_map(const std::map<std::string, std::string>& kv);
};

/// Network outputs, all already squashed into their ranges.
template <typename Scalar>
struct Decomposition {
  Tensor<Scalar> depth;         // [B, 1, G, G], G = grid size
  Tensor<Scalar> albedo;        // [B, 3, G, G]
  Tensor<Scalar> pose;          // [B, 6]: camera-frame rotation (radians), translation
  Tensor<Scalar> light_angles;  // [B, 2], degrees
  Tensor<Scalar> ambient;       // [B, 1]
  Tensor<Scalar> diffuse;       // [B, 1]
};

/// mid + half_range * tanh(x) for (lo, hi).
template <typename Scalar>
Tensor<Scalar> squash_range(const Tensor<Scalar>& x, Scalar lo, Scalar hi);

/// Image [B, 3, S, S] in [0, 1] -> Decomposition. Four independent
/// sub-networks: depth and albedo encoder-decoders, viewpoint and light
/// encoders.
template <typename Scalar>
class Decomposer {
 public:
  explicit Decomposer(const NetConfig& cfg);

  Decomposition<Scalar> operator()(const Tensor<Scalar>& image) const;

  const NetConfig& config() const { return cfg_; }
  const std::vector<std::pair<std::string, Tensor<Scalar>>>& named_parameters() const { return params_; }
  std::vector<Tensor<Scalar>> parameters() const;
  Index parameter_count() const;

  void save(const std::filesystem::path& path) const;
  static Decomposer load(const std::filesystem::path& path);

 private:
  struct Layer {
    Tensor<Scalar> weight;
    Tensor<Scalar> bias;
    Index stride = 1;
    Index pad = 0;
    bool transpose = false;
  };
  struct DenseBlock {
    Layer conv1, conv2, transition;
  };
  struct EncoderDecoder {
    std::vector<Layer> encoder;   // strided convs, then the bottleneck conv
    std::vector<Layer> decoder;   // transposed convs
    std::vector<DenseBlock> dense;
    Layer head;
  };
  struct Encoder {
    std::vector<Layer> convs;
    Tensor<Scalar> fc_weight, fc_bias;
  };

  Layer make_conv(const std::string& name, Index in, Index out, Index k, Index stride, Index pad,
                  bool transpose, double gain);
  EncoderDecoder make_encoder_decoder(const std::string& name, Index out_channels, bool dense);
  Encoder make_encoder(const std::string& name, Index outputs);

  Tensor<Scalar> run(const Layer& l, const Tensor<Scalar>& x) const;
  Tensor<Scalar> run(const EncoderDecoder& net, const Tensor<Scalar>& x) const;
  Tensor<Scalar> run(const Encoder& net, const Tensor<Scalar>& x) const;

  NetConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor<Scalar>>> params_;
  EncoderDecoder depth_net_, albedo_net_;
  Encoder view_net_, light_net_;
};

/// Flat archive of named fp32 arrays: the header line "PHOTOGEO-CKPT-1",
/// "config key=value" lines, "tensor name shape offset count" lines and
/// "data" followed by the raw little-endian floats.
struct Checkpoint {
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, std::pair<Shape, std::vector<float>>>> tensors;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace photogeo
