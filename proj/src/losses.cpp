#include "photogeo/losses.hpp"

#include "photogeo/ops.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace photogeo {

template <typename Scalar>
Tensor<Scalar> l1_loss(const Tensor<Scalar>& rec, const Tensor<Scalar>& target) {
  if (rec.shape() != target.shape()) {
    throw std::invalid_argument("l1_loss: shape mismatch " + shape_string(rec.shape()) + " vs " +
                                shape_string(target.shape()));
  }
  return mean(abs(sub(rec, target)));
}

template <typename Scalar>
RandomConvEncoder<Scalar>::RandomConvEncoder(std::uint64_t seed, Index in_channels,
                                             std::vector<Index> channels) {
  std::mt19937_64 rng(seed);
  Index c_in = in_channels;
  for (const Index c_out : channels) {
    const double fan_in = static_cast<double>(c_in * 9);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    Array<Scalar> w(c_out * c_in * 9);
    for (Index i = 0; i < w.size(); ++i) w[i] = Scalar(normal(rng));
    weights_.push_back(Tensor<Scalar>::from_array({c_out, c_in, 3, 3}, std::move(w)));
    biases_.push_back(Tensor<Scalar>::zeros({c_out}));
    c_in = c_out;
  }
}

template <typename Scalar>
std::vector<Tensor<Scalar>> RandomConvEncoder<Scalar>::features(const Tensor<Scalar>& image) const {
  std::vector<Tensor<Scalar>> out;
  Tensor<Scalar> x = image;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    x = leaky_relu(conv2d(x, weights_[k], biases_[k], 2, 1), Scalar(0.2));
    out.push_back(x);
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> perceptual_loss(const Tensor<Scalar>& rec, const Tensor<Scalar>& target,
                               const FeatureEncoder<Scalar>& encoder) {
  if (rec.shape() != target.shape()) throw std::invalid_argument("perceptual_loss: shape mismatch");
  const auto fr = encoder.features(rec);
  const auto ft = encoder.features(target.detach());
  if (fr.size() != ft.size() || fr.empty()) {
    throw std::runtime_error("perceptual_loss: encoder returned inconsistent features");
  }
  Tensor<Scalar> total = mean(square(sub(fr[0], ft[0].detach())));
  for (std::size_t k = 1; k < fr.size(); ++k) total = add(total, mean(square(sub(fr[k], ft[k].detach()))));
  return total;
}

template <typename Scalar>
Tensor<Scalar> reg_viewpoint(const Tensor<Scalar>& poses) {
  if (poses.ndim() != 2 || poses.dim(1) != 6) throw std::invalid_argument("reg_viewpoint: poses must be [B, 6]");
  if (poses.dim(0) < 1) throw std::invalid_argument("reg_viewpoint: empty batch");
  return sum(square(batch_mean(poses)));
}

template <typename Scalar>
Tensor<Scalar> reg_depth_pair(const Tensor<Scalar>& d_i, const Tensor<Scalar>& d_j) {
  if (d_i.shape() != d_j.shape()) throw std::invalid_argument("reg_depth_pair: shape mismatch");
  return mean(square(sub(d_i, d_j)));
}

template <typename Scalar>
Tensor<Scalar> depth_pair_term(const Tensor<Scalar>& depth) {
  if (depth.ndim() < 2 || depth.dim(0) < 1) throw std::invalid_argument("depth_pair_term: need [B, ...]");
  const Index B = depth.dim(0), P = depth.size() / B;
  if (B == 1) return Tensor<Scalar>::scalar(0);
  // sum_{i<j} |d_i - d_j|^2 = B sum_i |d_i - mean|^2
  const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> d(depth.value().data(), P, B);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m = d.rowwise().mean();
  const Scalar c = Scalar(2) / Scalar((B - 1) * P);
  Array<Scalar> out(1);
  out[0] = c * (d.colwise() - m).squaredNorm();
  return Tensor<Scalar>::make_result(
      {}, std::move(out), {depth}, "depth_pair", [B, P, c](detail::Node<Scalar>& self) {
        auto& pd = *self.parents[0];
        const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> dv(pd.value.data(), P, B);
        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mv = dv.rowwise().mean();
        Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> g(pd.grad_buffer().data(), P, B);
        g += (Scalar(2) * c * self.grad[0]) * (dv.colwise() - mv);
      });
}

template <typename Scalar>
ObjectiveTerms<Scalar> objective(const Tensor<Scalar>& rec, const Tensor<Scalar>& target,
                                 const Tensor<Scalar>& depth, const Tensor<Scalar>& poses,
                                 const LossWeights& weights,
                                 const FeatureEncoder<Scalar>* encoder) {
  ObjectiveTerms<Scalar> t;
  t.l1 = l1_loss(rec, target);
  t.perceptual = (encoder && weights.lambda_perc != 0) ? perceptual_loss(rec, target, *encoder)
                                                      : Tensor<Scalar>::scalar(0);
  t.depth_pair = depth_pair_term(depth);
  t.viewpoint = reg_viewpoint(poses);
  t.total = add(add(affine(t.l1, Scalar(weights.lambda1), Scalar(0)),
                    affine(t.perceptual, Scalar(weights.lambda_perc), Scalar(0))),
                add(affine(t.depth_pair, Scalar(weights.lambda_d), Scalar(0)),
                    affine(t.viewpoint, Scalar(weights.lambda_vp), Scalar(0))));
  return t;
}

#define PHOTOGEO_INSTANTIATE_LOSSES(S)                                                        \
  template Tensor<S> l1_loss(const Tensor<S>&, const Tensor<S>&);                              \
  template class RandomConvEncoder<S>;                                                         \
  template Tensor<S> perceptual_loss(const Tensor<S>&, const Tensor<S>&,                       \
                                     const FeatureEncoder<S>&);                                \
  template Tensor<S> reg_viewpoint(const Tensor<S>&);                                          \
  template Tensor<S> reg_depth_pair(const Tensor<S>&, const Tensor<S>&);                       \
  template Tensor<S> depth_pair_term(const Tensor<S>&);                                        \
  template ObjectiveTerms<S> objective(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,   \
                                       const Tensor<S>&, const LossWeights&,                   \
                                       const FeatureEncoder<S>*);

PHOTOGEO_INSTANTIATE_LOSSES(float)
PHOTOGEO_INSTANTIATE_LOSSES(double)

}  // namespace photogeo
