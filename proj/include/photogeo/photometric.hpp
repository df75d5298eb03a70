#pragma once

#include "photogeo/camera.hpp"
#include "photogeo/tensor.hpp"

namespace photogeo {

/// Unit light direction plus ambient / diffuse weights.
template <typename Scalar>
struct LightState {
  Vector3<Scalar> direction{0, 0, -1};
  Scalar ambient = Scalar(0.5);
  Scalar diffuse = Scalar(0.5);
};

/// l = (sin ax cos ay, sin ay, -cos ax cos ay); angles in degrees. The
/// (0, 0) direction points back at the camera (head-on lighting).
template <typename Scalar>
Vector3<Scalar> light_from_angles(Scalar ax_deg, Scalar ay_deg);

/// Differentiable form of light_from_angles: [B, 2] degrees -> [B, 3].
template <typename Scalar>
Tensor<Scalar> light_direction(const Tensor<Scalar>& angles_deg);

/// Result of normals_from_depth; `degenerate` counts pixels whose tangent
/// cross product vanished and were replaced by (0, 0, -1).
template <typename Scalar>
struct NormalMap {
  Tensor<Scalar> normals;  // [B, 3, H, W]
  Index degenerate = 0;
};

/// Unit normals from the unprojected depth map. Tangents are central
/// differences of d K^-1 p along u and v (one-sided on the border), and
/// n = normalize(t_v x t_u), which faces the camera for a depth-map surface.
/// depth [B, 1, H, W], H and W >= 3.
template <typename Scalar>
NormalMap<Scalar> normals_from_depth(const Tensor<Scalar>& depth, const Intrinsics<Scalar>& K);

/// J = (ks + kd max(0, <l, n>)) a, per channel and without clamping.
/// albedo [B, C, H, W], normals [B, 3, H, W], light [B, 3], ambient and
/// diffuse [B] or [B, 1].
template <typename Scalar>
Tensor<Scalar> shade(const Tensor<Scalar>& albedo, const Tensor<Scalar>& normals,
                     const Tensor<Scalar>& light, const Tensor<Scalar>& ambient,
                     const Tensor<Scalar>& diffuse);

}  // namespace photogeo
