#include "photogeo/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace photogeo {

template <typename Scalar>
Matrix3<Scalar> Intrinsics<Scalar>::matrix() const {
  Matrix3<Scalar> K;
  K << f, 0, cu, 0, f, cv, 0, 0, 1;
  return K;
}

template <typename Scalar>
Intrinsics<Scalar> Intrinsics<Scalar>::padded(Index factor) const {
  if (factor < 1) throw std::invalid_argument("padding factor must be >= 1");
  Intrinsics out = *this;
  out.width = width * factor;
  out.height = height * factor;
  out.cu = Scalar(out.width - 1) / 2;
  out.cv = Scalar(out.height - 1) / 2;
  return out;
}

template <typename Scalar>
Intrinsics<Scalar> Intrinsics<Scalar>::cropped(Index w, Index h) const {
  if (w > width || h > height || (width - w) % 2 || (height - h) % 2) {
    throw std::invalid_argument("crop window must be centered inside the grid");
  }
  Intrinsics out = *this;
  out.width = w;
  out.height = h;
  out.cu = cu - Scalar((width - w) / 2);
  out.cv = cv - Scalar((height - h) / 2);
  return out;
}

template <typename Scalar>
Intrinsics<Scalar> intrinsics_from_fov(Index width, Index height, Scalar fov_deg) {
  if (width < 2 || height < 2) throw std::invalid_argument("image must be at least 2x2");
  if (!(fov_deg > 0 && fov_deg < 180)) {
    throw std::invalid_argument("field of view must lie in (0, 180) degrees");
  }
  const Scalar half = fov_deg * std::numbers::pi_v<Scalar> / Scalar(360);
  Intrinsics<Scalar> K;
  K.width = width;
  K.height = height;
  K.f = Scalar(width) / (Scalar(2) * std::tan(half));
  K.cu = Scalar(width - 1) / 2;
  K.cv = Scalar(height - 1) / 2;
  return K;
}

template <typename Scalar>
Matrix3<Scalar> hat(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

namespace {

// sin(t)/t and (1 - cos t)/t^2, the latter via 2 sin^2(t/2) to avoid
// cancellation for small angles.
template <typename Scalar>
std::pair<Scalar, Scalar> rodrigues_coefficients(Scalar theta) {
  const Scalar s = std::sin(theta / 2);
  return {std::sin(theta) / theta, Scalar(2) * s * s / (theta * theta)};
}

}  // namespace

template <typename Scalar>
Matrix3<Scalar> so3_exp(const Vector3<Scalar>& v) {
  const Scalar theta = v.norm();
  const Matrix3<Scalar> K = hat(v);
  if (theta < Scalar(kSmallAngle)) return Matrix3<Scalar>::Identity() + K;
  const auto [a, b] = rodrigues_coefficients(theta);
  return Matrix3<Scalar>::Identity() + a * K + b * K * K;
}

template <typename Scalar>
std::array<Matrix3<Scalar>, 3> so3_exp_jacobian(const Vector3<Scalar>& v) {
  std::array<Matrix3<Scalar>, 3> out;
  const Scalar theta = v.norm();
  if (theta < Scalar(kSmallAngle)) {
    for (int i = 0; i < 3; ++i) out[i] = hat<Scalar>(Vector3<Scalar>::Unit(i));
    return out;
  }
  // dR/dv_i = (v_i [v]x + [v x (I - R) e_i]x) R / |v|^2
  const Matrix3<Scalar> K = hat(v);
  const auto [a, b] = rodrigues_coefficients(theta);
  const Matrix3<Scalar> R = Matrix3<Scalar>::Identity() + a * K + b * K * K;
  const Matrix3<Scalar> i_minus_r = -(a * K + b * K * K);
  const Scalar inv = Scalar(1) / (theta * theta);
  for (int i = 0; i < 3; ++i) {
    const Vector3<Scalar> c = v.cross(i_minus_r.col(i));
    out[i] = (v[i] * K + hat(c)) * R * inv;
  }
  return out;
}

template <typename Scalar>
std::pair<Matrix3<Scalar>, Vector3<Scalar>> se3_exp(const Vector6<Scalar>& w) {
  return {so3_exp<Scalar>(w.template head<3>()), w.template tail<3>()};
}

template <typename Scalar>
Vector3<Scalar> unproject(const Intrinsics<Scalar>& K, Scalar u, Scalar v, Scalar depth) {
  if (!(depth > 0)) throw std::invalid_argument("unproject: depth must be positive");
  return depth * K.ray(u, v);
}

template <typename Scalar>
std::pair<Matrix3<Scalar>, Vector3<Scalar>> pose_at(const Tensor<Scalar>& pose, Index b) {
  if (pose.ndim() != 2 || pose.dim(1) != 6) {
    throw std::invalid_argument("pose tensor must be [B, 6], got " + shape_string(pose.shape()));
  }
  Vector6<Scalar> w = Eigen::Map<const Vector6<Scalar>>(pose.value().data() + 6 * b);
  return se3_exp<Scalar>(w);
}

template <typename Scalar>
Vector6<Scalar> pose_gradient(const Vector3<Scalar>& rotation_vector,
                              const Matrix3<Scalar>& grad_R, const Vector3<Scalar>& grad_T) {
  Vector6<Scalar> g;
  const auto J = so3_exp_jacobian(rotation_vector);
  for (int i = 0; i < 3; ++i) g[i] = (grad_R.array() * J[i].array()).sum();
  g.template tail<3>() = grad_T;
  return g;
}

namespace {

template <typename Scalar>
void check_depth_pose(const Tensor<Scalar>& depth, const Tensor<Scalar>& pose,
                      const Intrinsics<Scalar>& K, const char* op) {
  if (depth.ndim() != 4 || depth.dim(1) != 1) {
    throw std::invalid_argument(std::string(op) + ": depth must be [B, 1, H, W]");
  }
  if (pose.ndim() != 2 || pose.dim(1) != 6 || pose.dim(0) != depth.dim(0)) {
    throw std::invalid_argument(std::string(op) + ": pose must be [B, 6]");
  }
  if (depth.dim(2) != K.height || depth.dim(3) != K.width) {
    throw std::invalid_argument(std::string(op) + ": depth size does not match intrinsics");
  }
}

template <typename Scalar>
Vector3<Scalar> rotation_vector_at(const Array<Scalar>& pose, Index b) {
  return Eigen::Map<const Vector3<Scalar>>(pose.data() + 6 * b);
}

}  // namespace

template <typename Scalar>
WarpField<Scalar> forward_warp_field(const Tensor<Scalar>& depth, const Tensor<Scalar>& pose,
                                     const Intrinsics<Scalar>& K) {
  check_depth_pose(depth, pose, K, "forward_warp_field");
  const Index B = depth.dim(0), H = K.height, W = K.width, N = H * W;
  Array<Scalar> out(B * 2 * N);
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(B * N), 0);
  for (Index b = 0; b < B; ++b) {
    const auto [R, T] = pose_at(pose, b);
    for (Index y = 0; y < H; ++y) {
      for (Index x = 0; x < W; ++x) {
        const Index i = y * W + x;
        const Scalar d = depth.value()[b * N + i];
        const Vector3<Scalar> X = d * (R * K.ray(Scalar(x), Scalar(y))) + T;
        const bool ok = d > 0 && X.z() > Scalar(kNearPlane);
        valid[static_cast<std::size_t>(b * N + i)] = ok;
        const Vector2<Scalar> p = ok ? K.project(X) : Vector2<Scalar>(-1, -1);
        out[(b * 2 + 0) * N + i] = p.x();
        out[(b * 2 + 1) * N + i] = p.y();
      }
    }
  }
  auto coords = Tensor<Scalar>::make_result(
      {B, 2, H, W}, std::move(out), {depth, pose}, "forward_warp",
      [K, B, W, N, valid](detail::Node<Scalar>& self) {
        auto& pd = *self.parents[0];
        auto& pp = *self.parents[1];
        for (Index b = 0; b < B; ++b) {
          const Vector3<Scalar> rv = rotation_vector_at(pp.value, b);
          const Matrix3<Scalar> R = so3_exp(rv);
          Matrix3<Scalar> gR = Matrix3<Scalar>::Zero();
          Vector3<Scalar> gT = Vector3<Scalar>::Zero();
          for (Index i = 0; i < N; ++i) {
            if (!valid[static_cast<std::size_t>(b * N + i)]) continue;
            const Scalar gu = self.grad[(b * 2 + 0) * N + i];
            const Scalar gv = self.grad[(b * 2 + 1) * N + i];
            if (gu == 0 && gv == 0) continue;
            const Vector3<Scalar> r = K.ray(Scalar(i % W), Scalar(i / W));
            const Scalar d = pd.value[b * N + i];
            const Vector3<Scalar> Rr = R * r;
            const Vector3<Scalar> X = d * Rr + Eigen::Map<const Vector3<Scalar>>(pp.value.data() + 6 * b + 3);
            const Scalar iz = Scalar(1) / X.z();
            const Vector3<Scalar> gX(K.f * iz * gu, K.f * iz * gv,
                                     -K.f * iz * iz * (X.x() * gu + X.y() * gv));
            if (pd.requires_grad) pd.grad_buffer()[b * N + i] += Rr.dot(gX);
            gR += gX * (d * r).transpose();
            gT += gX;
          }
          if (pp.requires_grad) {
            Eigen::Map<Vector6<Scalar>>(pp.grad_buffer().data() + 6 * b) +=
                pose_gradient<Scalar>(rv, gR, gT);
          }
        }
      });
  return {std::move(coords), std::move(valid)};
}

template <typename Scalar>
WarpField<Scalar> inverse_warp_field(const Tensor<Scalar>& actual_depth,
                                     const Tensor<Scalar>& pose, const Intrinsics<Scalar>& K,
                                     const std::vector<std::uint8_t>& observed) {
  check_depth_pose(actual_depth, pose, K, "inverse_warp_field");
  const Index B = actual_depth.dim(0), H = K.height, W = K.width, N = H * W;
  if (!observed.empty() && static_cast<Index>(observed.size()) != B * N) {
    throw std::invalid_argument("inverse_warp_field: observed mask has wrong size");
  }
  Array<Scalar> out(B * 2 * N);
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(B * N), 0);
  for (Index b = 0; b < B; ++b) {
    const auto [R, T] = pose_at(pose, b);
    for (Index i = 0; i < N; ++i) {
      const Scalar d = actual_depth.value()[b * N + i];
      const bool seen = observed.empty() || observed[static_cast<std::size_t>(b * N + i)];
      const Vector3<Scalar> P =
          R.transpose() * (d * K.ray(Scalar(i % W), Scalar(i / W)) - T);
      const bool ok = seen && d > 0 && P.z() > Scalar(kNearPlane);
      valid[static_cast<std::size_t>(b * N + i)] = ok;
      const Vector2<Scalar> p = ok ? K.project(P) : Vector2<Scalar>(-1, -1);
      out[(b * 2 + 0) * N + i] = p.x();
      out[(b * 2 + 1) * N + i] = p.y();
    }
  }
  auto coords = Tensor<Scalar>::make_result(
      {B, 2, H, W}, std::move(out), {actual_depth, pose}, "inverse_warp",
      [K, B, W, N, valid](detail::Node<Scalar>& self) {
        auto& pd = *self.parents[0];
        auto& pp = *self.parents[1];
        for (Index b = 0; b < B; ++b) {
          const Vector3<Scalar> rv = rotation_vector_at(pp.value, b);
          const Matrix3<Scalar> R = so3_exp(rv);
          const Vector3<Scalar> T = Eigen::Map<const Vector3<Scalar>>(pp.value.data() + 6 * b + 3);
          Matrix3<Scalar> gR = Matrix3<Scalar>::Zero();
          Vector3<Scalar> gT = Vector3<Scalar>::Zero();
          for (Index i = 0; i < N; ++i) {
            if (!valid[static_cast<std::size_t>(b * N + i)]) continue;
            const Scalar gu = self.grad[(b * 2 + 0) * N + i];
            const Scalar gv = self.grad[(b * 2 + 1) * N + i];
            if (gu == 0 && gv == 0) continue;
            const Vector3<Scalar> r = K.ray(Scalar(i % W), Scalar(i / W));
            const Scalar d = pd.value[b * N + i];
            const Vector3<Scalar> Y = d * r - T;
            const Vector3<Scalar> P = R.transpose() * Y;
            const Scalar iz = Scalar(1) / P.z();
            const Vector3<Scalar> gP(K.f * iz * gu, K.f * iz * gv,
                                     -K.f * iz * iz * (P.x() * gu + P.y() * gv));
            const Vector3<Scalar> gY = R * gP;
            if (pd.requires_grad) pd.grad_buffer()[b * N + i] += gY.dot(r);
            gT -= gY;
            gR += Y * gP.transpose();
          }
          if (pp.requires_grad) {
            Eigen::Map<Vector6<Scalar>>(pp.grad_buffer().data() + 6 * b) +=
                pose_gradient<Scalar>(rv, gR, gT);
          }
        }
      });
  return {std::move(coords), std::move(valid)};
}

template <typename Scalar>
Tensor<Scalar> pivot_pose(const Tensor<Scalar>& pose, Scalar pivot) {
  if (pose.ndim() != 2 || pose.dim(1) != 6) throw std::invalid_argument("pivot_pose: pose must be [B, 6]");
  const Index B = pose.dim(0);
  const Vector3<Scalar> c(0, 0, pivot);
  Array<Scalar> out = pose.value();
  for (Index b = 0; b < B; ++b) {
    const auto [R, T] = pose_at(pose, b);
    out.template segment<3>(6 * b + 3) = (T + c - R * c).array();
  }
  return Tensor<Scalar>::make_result(
      {B, 6}, std::move(out), {pose}, "pivot_pose", [B, c](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        auto& g = in.grad_buffer();
        for (Index b = 0; b < B; ++b) {
          const Vector3<Scalar> w = in.value.template segment<3>(6 * b);
          const Vector3<Scalar> gT = self.grad.template segment<3>(6 * b + 3);
          const auto J = so3_exp_jacobian(w);
          for (int i = 0; i < 3; ++i) g[6 * b + i] += self.grad[6 * b + i] - gT.dot(J[i] * c);
          g.template segment<3>(6 * b + 3) += gT.array();
        }
      });
}

#define PHOTOGEO_INSTANTIATE_CAMERA(S)                                                       \
  template struct Intrinsics<S>;                                                              \
  template Intrinsics<S> intrinsics_from_fov(Index, Index, S);                                \
  template Matrix3<S> hat(const Vector3<S>&);                                                 \
  template Matrix3<S> so3_exp(const Vector3<S>&);                                             \
  template std::array<Matrix3<S>, 3> so3_exp_jacobian(const Vector3<S>&);                     \
  template std::pair<Matrix3<S>, Vector3<S>> se3_exp(const Vector6<S>&);                      \
  template Vector3<S> unproject(const Intrinsics<S>&, S, S, S);                               \
  template std::pair<Matrix3<S>, Vector3<S>> pose_at(const Tensor<S>&, Index);                \
  template Vector6<S> pose_gradient(const Vector3<S>&, const Matrix3<S>&, const Vector3<S>&); \
  template WarpField<S> forward_warp_field(const Tensor<S>&, const Tensor<S>&,                \
                                           const Intrinsics<S>&);                             \
  template WarpField<S> inverse_warp_field(const Tensor<S>&, const Tensor<S>&,                \
                                           const Intrinsics<S>&,                              \
                                           const std::vector<std::uint8_t>&);     \
  template Tensor<S> pivot_pose(const Tensor<S>&, S);

PHOTOGEO_INSTANTIATE_CAMERA(float)
PHOTOGEO_INSTANTIATE_CAMERA(double)

}  // namespace photogeo
