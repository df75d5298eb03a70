#pragma once

#include "photogeo/tensor.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace photogeo {

template <typename Scalar> using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar> using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Points whose camera-frame z falls at or below this are masked.
inline constexpr double kNearPlane = 0.01;
/// Rodrigues switches to the first-order form below this rotation angle.
inline constexpr double kSmallAngle = 1e-8;

/// Pinhole intrinsics with square pixels, +z into the scene, y down.
template <typename Scalar>
struct Intrinsics {
  Scalar f = 1;
  Scalar cu = 0;
  Scalar cv = 0;
  Index width = 0;
  Index height = 0;

  Matrix3<Scalar> matrix() const;
  /// K^-1 (u, v, 1)
  Vector3<Scalar> ray(Scalar u, Scalar v) const {
    return {(u - cu) / f, (v - cv) / f, Scalar(1)};
  }
  Vector2<Scalar> project(const Vector3<Scalar>& p) const {
    return {f * p.x() / p.z() + cu, f * p.y() / p.z() + cv};
  }
  /// Same focal length on a grid `factor` times larger, principal point
  /// moved to the new center. The centered crop of the enlarged grid sees
  /// exactly what the original grid sees.
  Intrinsics padded(Index factor) const;
  /// Intrinsics of the centered `w` x `h` window of this grid.
  Intrinsics cropped(Index w, Index h) const;
};

/// f = W / (2 tan(fov / 2)), principal point at the grid center.
template <typename Scalar>
Intrinsics<Scalar> intrinsics_from_fov(Index width, Index height, Scalar fov_deg = Scalar(25));

/// Euclidean viewpoint change: axis-angle rotation (radians) then translation.
template <typename Scalar>
struct Pose {
  Vector6<Scalar> w = Vector6<Scalar>::Zero();

  Vector3<Scalar> rotation_vector() const { return w.template head<3>(); }
  Vector3<Scalar> translation() const { return w.template tail<3>(); }
};

template <typename Scalar>
Matrix3<Scalar> hat(const Vector3<Scalar>& v);

/// Rodrigues' formula for the SO(3) exponential.
template <typename Scalar>
Matrix3<Scalar> so3_exp(const Vector3<Scalar>& v);

/// d exp(v) / d v_i for i = 0, 1, 2.
template <typename Scalar>
std::array<Matrix3<Scalar>, 3> so3_exp_jacobian(const Vector3<Scalar>& v);

template <typename Scalar>
std::pair<Matrix3<Scalar>, Vector3<Scalar>> se3_exp(const Vector6<Scalar>& w);

/// P = d * K^-1 (u, v, 1). Throws for non-positive depth.
template <typename Scalar>
Vector3<Scalar> unproject(const Intrinsics<Scalar>& K, Scalar u, Scalar v, Scalar depth);

/// Per-pixel target coordinates. `coords` is [B, 2, H, W] holding (u, v);
/// `valid` has one flag per (b, pixel).
template <typename Scalar>
struct WarpField {
  Tensor<Scalar> coords;
  std::vector<std::uint8_t> valid;

  Index batch() const { return coords.dim(0); }
  Index height() const { return coords.dim(2); }
  Index width() const { return coords.dim(3); }
};

/// Canonical -> actual view: p' ~ K (d_uv R K^-1 p + T).
/// depth [B, 1, H, W], pose [B, 6].
template <typename Scalar>
WarpField<Scalar> forward_warp_field(const Tensor<Scalar>& depth, const Tensor<Scalar>& pose,
                                     const Intrinsics<Scalar>& K);

/// Actual -> canonical view: P = R^T (d'_{u'v'} K^-1 p' - T), p ~ K P.
/// `observed` flags actual-view pixels that carry a depth (empty = all).
template <typename Scalar>
WarpField<Scalar> inverse_warp_field(const Tensor<Scalar>& actual_depth,
                                     const Tensor<Scalar>& pose, const Intrinsics<Scalar>& K,
                                     const std::vector<std::uint8_t>& observed = {});

/// Rotation and translation of batch entry b of a [B, 6] pose tensor.
template <typename Scalar>
std::pair<Matrix3<Scalar>, Vector3<Scalar>> pose_at(const Tensor<Scalar>& pose, Index b);

/// Chain rule from dL/dR, dL/dT to dL/dw for one pose.
template <typename Scalar>
Vector6<Scalar> pose_gradient(const Vector3<Scalar>& rotation_vector,
                              const Matrix3<Scalar>& grad_R, const Vector3<Scalar>& grad_T);

/// Rotation about the point (0, 0, pivot) followed by a translation,
/// rewritten as a camera-frame pose: [w, t] -> [w, t + c - R(w) c].
/// pose [B, 6].
template <typename Scalar>
Tensor<Scalar> pivot_pose(const Tensor<Scalar>& pose, Scalar pivot);

}  // namespace photogeo
