#pragma once

#include "photogeo/tensor.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace photogeo {

struct LossWeights {
  double lambda1 = 1.0;
  double lambda_perc = 0.003;
  double lambda_d = 0.05;
  double lambda_vp = 1.0;
};

/// Mean absolute difference over every element.
template <typename Scalar>
Tensor<Scalar> l1_loss(const Tensor<Scalar>& rec, const Tensor<Scalar>& target);

/// Maps an image batch to a list of feature maps. Implementations must not
/// expose trainable parameters to the caller's optimizer.
template <typename Scalar>
class FeatureEncoder {
 public:
  virtual ~FeatureEncoder() = default;
  virtual std::vector<Tensor<Scalar>> features(const Tensor<Scalar>& image) const = 0;
};

/// The image itself as the only feature map.
template <typename Scalar>
class IdentityEncoder final : public FeatureEncoder<Scalar> {
 public:
  std::vector<Tensor<Scalar>> features(const Tensor<Scalar>& image) const override {
    return {image};
  }
};

/// Frozen random strided-conv pyramid: four 3x3 stride-2 stages with
/// LeakyReLU(0.2), one feature map per stage.
template <typename Scalar>
class RandomConvEncoder final : public FeatureEncoder<Scalar> {
 public:
  explicit RandomConvEncoder(std::uint64_t seed, Index in_channels = 3,
                             std::vector<Index> channels = {16, 32, 64, 128});
  std::vector<Tensor<Scalar>> features(const Tensor<Scalar>& image) const override;

 private:
  std::vector<Tensor<Scalar>> weights_;
  std::vector<Tensor<Scalar>> biases_;
};

/// sum_k mean((e_k(rec) - e_k(target))^2); the target's features carry no
/// gradient.
template <typename Scalar>
Tensor<Scalar> perceptual_loss(const Tensor<Scalar>& rec, const Tensor<Scalar>& target,
                               const FeatureEncoder<Scalar>& encoder);

/// Squared norm of the batch-mean pose; poses [B, 6].
template <typename Scalar>
Tensor<Scalar> reg_viewpoint(const Tensor<Scalar>& poses);

/// mean((d_i - d_j)^2) over pixels.
template <typename Scalar>
Tensor<Scalar> reg_depth_pair(const Tensor<Scalar>& d_i, const Tensor<Scalar>& d_j);

/// 2 / (B (B - 1)) sum_{i<j} reg_depth_pair(d_i, d_j) over a [B, ...]
/// batch, evaluated through the per-pixel batch variance. Zero for B = 1.
template <typename Scalar>
Tensor<Scalar> depth_pair_term(const Tensor<Scalar>& depth);

template <typename Scalar>
struct ObjectiveTerms {
  Tensor<Scalar> l1;
  Tensor<Scalar> perceptual;
  Tensor<Scalar> depth_pair;
  Tensor<Scalar> viewpoint;
  Tensor<Scalar> total;
};

/// lambda1 l1 + lambda_perc perceptual + lambda_d depth_pair + lambda_vp
/// viewpoint. The perceptual term is skipped when `encoder` is null or its
/// weight is zero. `depth` is the canonical depth batch, `poses` [B, 6].
template <typename Scalar>
ObjectiveTerms<Scalar> objective(const Tensor<Scalar>& rec, const Tensor<Scalar>& target,
                                 const Tensor<Scalar>& depth, const Tensor<Scalar>& poses,
                                 const LossWeights& weights,
                                 const FeatureEncoder<Scalar>* encoder);

}  // namespace photogeo
