#pragma once

#include "photogeo/tensor.hpp"

#include <vector>

namespace photogeo {

// Elementwise arithmetic. Binary operations require identical shapes; there
// is no implicit broadcasting.
template <typename Scalar> Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar> Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar> Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar> Tensor<Scalar> div(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// scale * x + shift
template <typename Scalar>
Tensor<Scalar> affine(const Tensor<Scalar>& x, Scalar scale, Scalar shift);

template <typename Scalar> Tensor<Scalar> neg(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> abs(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> square(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> sqrt(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> exp(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> log(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> tanh(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> sigmoid(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> relu(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> leaky_relu(const Tensor<Scalar>& x, Scalar slope);

// Reductions to a 0-d tensor.
template <typename Scalar> Tensor<Scalar> sum(const Tensor<Scalar>& x);
template <typename Scalar> Tensor<Scalar> mean(const Tensor<Scalar>& x);

/// Mean over the leading (batch) axis: [B, ...] -> [...].
template <typename Scalar> Tensor<Scalar> batch_mean(const Tensor<Scalar>& x);

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& x, Shape shape);

/// Columns [start, start + count) of a 2-d tensor.
template <typename Scalar>
Tensor<Scalar> columns(const Tensor<Scalar>& x, Index start, Index count);

/// Concatenates 2-d tensors with equal row counts along the column axis.
template <typename Scalar>
Tensor<Scalar> concat_columns(const std::vector<Tensor<Scalar>>& parts);

/// Concatenates NCHW tensors with equal B, H, W along the channel axis.
template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<Tensor<Scalar>>& parts);

/// Centered spatial window of an NCHW tensor.
template <typename Scalar>
Tensor<Scalar> crop_center(const Tensor<Scalar>& x, Index height, Index width);

/// Reverses the last axis: [flip x]_{..., u} = x_{..., W-1-u}.
template <typename Scalar> Tensor<Scalar> hflip(const Tensor<Scalar>& x);

/// hflip applied only to the batch entries whose flag is set.
template <typename Scalar>
Tensor<Scalar> hflip_samples(const Tensor<Scalar>& x, const std::vector<bool>& flags);

/// Multiplies batch entry b by the constant weights[b].
template <typename Scalar>
Tensor<Scalar> scale_samples(const Tensor<Scalar>& x, const std::vector<Scalar>& weights);

/// x [B, F], weight [O, F], bias [O] -> [B, O]
template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias);

/// x [B, C, H, W], weight [O, C, k, k], bias [O].
template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, Index stride, Index pad);

/// x [B, C, H, W], weight [C, O, k, k], bias [O]; the adjoint of conv2d.
/// Output size (H - 1) * stride - 2 * pad + k.
template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                                const Tensor<Scalar>& bias, Index stride, Index pad);

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, const Tensor<Scalar>& b) { return mul(a, b); }
template <typename Scalar>
Tensor<Scalar> operator*(const Tensor<Scalar>& a, Scalar s) { return affine(a, s, Scalar(0)); }
template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& a) { return affine(a, s, Scalar(0)); }
template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, Scalar s) { return affine(a, Scalar(1), s); }
template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a) { return neg(a); }

}  // namespace photogeo
