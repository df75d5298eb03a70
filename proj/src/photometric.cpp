#include "photogeo/photometric.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace photogeo {

template <typename Scalar>
Vector3<Scalar> light_from_angles(Scalar ax_deg, Scalar ay_deg) {
  const Scalar k = std::numbers::pi_v<Scalar> / Scalar(180);
  const Scalar ax = ax_deg * k, ay = ay_deg * k;
  Vector3<Scalar> l(std::sin(ax) * std::cos(ay), std::sin(ay), -std::cos(ax) * std::cos(ay));
  return l.normalized();
}

template <typename Scalar>
Tensor<Scalar> light_direction(const Tensor<Scalar>& angles_deg) {
  if (angles_deg.ndim() != 2 || angles_deg.dim(1) != 2) {
    throw std::invalid_argument("light_direction: angles must be [B, 2]");
  }
  const Index B = angles_deg.dim(0);
  const Scalar k = std::numbers::pi_v<Scalar> / Scalar(180);
  Array<Scalar> out(3 * B);
  for (Index b = 0; b < B; ++b) {
    const Scalar ax = angles_deg.value()[2 * b] * k, ay = angles_deg.value()[2 * b + 1] * k;
    out[3 * b + 0] = std::sin(ax) * std::cos(ay);
    out[3 * b + 1] = std::sin(ay);
    out[3 * b + 2] = -std::cos(ax) * std::cos(ay);
  }
  return Tensor<Scalar>::make_result(
      {B, 3}, std::move(out), {angles_deg}, "light_direction",
      [B, k](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        auto& g = in.grad_buffer();
        for (Index b = 0; b < B; ++b) {
          const Scalar ax = in.value[2 * b] * k, ay = in.value[2 * b + 1] * k;
          const Scalar g0 = self.grad[3 * b], g1 = self.grad[3 * b + 1], g2 = self.grad[3 * b + 2];
          const Scalar sx = std::sin(ax), cx = std::cos(ax), sy = std::sin(ay), cy = std::cos(ay);
          g[2 * b] += k * (g0 * cx * cy + g2 * sx * cy);
          g[2 * b + 1] += k * (-g0 * sx * sy + g1 * cy + g2 * cx * sy);
        }
      });
}

namespace {

struct Stencil {
  Index lo, hi;  // t = P[hi] - P[lo]
};

inline Stencil stencil(Index i, Index n) {
  if (i == 0) return {0, 1};
  if (i == n - 1) return {n - 2, n - 1};
  return {i - 1, i + 1};
}

}  // namespace

template <typename Scalar>
NormalMap<Scalar> normals_from_depth(const Tensor<Scalar>& depth, const Intrinsics<Scalar>& K) {
  if (depth.ndim() != 4 || depth.dim(1) != 1) {
    throw std::invalid_argument("normals_from_depth: depth must be [B, 1, H, W]");
  }
  const Index B = depth.dim(0), H = depth.dim(2), W = depth.dim(3), N = H * W;
  if (H < 3 || W < 3) throw std::invalid_argument("normals_from_depth: need at least 3x3");
  if (H != K.height || W != K.width) {
    throw std::invalid_argument("normals_from_depth: depth size does not match intrinsics");
  }
  const Scalar tiny = std::numeric_limits<Scalar>::min() * Scalar(1e6);
  Array<Scalar> out(B * 3 * N);
  Index degenerate = 0;
  auto point = [K, W](const Array<Scalar>& d, Index base, Index x, Index y) {
    return Vector3<Scalar>(d[base + y * W + x] * K.ray(Scalar(x), Scalar(y)));
  };
  for (Index b = 0; b < B; ++b) {
    const Index base = b * N;
    for (Index y = 0; y < H; ++y) {
      const auto sv = stencil(y, H);
      for (Index x = 0; x < W; ++x) {
        const auto su = stencil(x, W);
        const Vector3<Scalar> tu = point(depth.value(), base, su.hi, y) - point(depth.value(), base, su.lo, y);
        const Vector3<Scalar> tv = point(depth.value(), base, x, sv.hi) - point(depth.value(), base, x, sv.lo);
        Vector3<Scalar> n = tv.cross(tu);
        const Scalar len = n.norm();
        if (!(len > tiny)) {
          n = Vector3<Scalar>(0, 0, -1);
          ++degenerate;
        } else {
          n /= len;
        }
        for (int c = 0; c < 3; ++c) out[(b * 3 + c) * N + y * W + x] = n[c];
      }
    }
  }
  auto normals = Tensor<Scalar>::make_result(
      {B, 3, H, W}, std::move(out), {depth}, "normals_from_depth",
      [K, B, H, W, N, tiny, point](detail::Node<Scalar>& self) {
        auto& pd = *self.parents[0];
        auto& gd = pd.grad_buffer();
        for (Index b = 0; b < B; ++b) {
          const Index base = b * N;
          for (Index y = 0; y < H; ++y) {
            const auto sv = stencil(y, H);
            for (Index x = 0; x < W; ++x) {
              const Index i = y * W + x;
              const Vector3<Scalar> gn(self.grad[(b * 3) * N + i], self.grad[(b * 3 + 1) * N + i],
                                       self.grad[(b * 3 + 2) * N + i]);
              if (gn.isZero(0)) continue;
              const auto su = stencil(x, W);
              const Vector3<Scalar> tu = point(pd.value, base, su.hi, y) - point(pd.value, base, su.lo, y);
              const Vector3<Scalar> tv = point(pd.value, base, x, sv.hi) - point(pd.value, base, x, sv.lo);
              const Vector3<Scalar> raw = tv.cross(tu);
              const Scalar len = raw.norm();
              if (!(len > tiny)) continue;
              const Vector3<Scalar> n = raw / len;
              const Vector3<Scalar> graw = (gn - n * n.dot(gn)) / len;
              const Vector3<Scalar> gtv = tu.cross(graw);
              const Vector3<Scalar> gtu = graw.cross(tv);
              gd[base + y * W + su.hi] += gtu.dot(K.ray(Scalar(su.hi), Scalar(y)));
              gd[base + y * W + su.lo] -= gtu.dot(K.ray(Scalar(su.lo), Scalar(y)));
              gd[base + sv.hi * W + x] += gtv.dot(K.ray(Scalar(x), Scalar(sv.hi)));
              gd[base + sv.lo * W + x] -= gtv.dot(K.ray(Scalar(x), Scalar(sv.lo)));
            }
          }
        }
      });
  return {std::move(normals), degenerate};
}

template <typename Scalar>
Tensor<Scalar> shade(const Tensor<Scalar>& albedo, const Tensor<Scalar>& normals,
                     const Tensor<Scalar>& light, const Tensor<Scalar>& ambient,
                     const Tensor<Scalar>& diffuse) {
  if (albedo.ndim() != 4 || normals.ndim() != 4 || normals.dim(1) != 3) {
    throw std::invalid_argument("shade: albedo [B, C, H, W] and normals [B, 3, H, W] required");
  }
  const Index B = albedo.dim(0), C = albedo.dim(1), H = albedo.dim(2), W = albedo.dim(3), N = H * W;
  if (normals.dim(0) != B || normals.dim(2) != H || normals.dim(3) != W) {
    throw std::invalid_argument("shade: albedo and normals differ in size");
  }
  if (light.size() != 3 * B || ambient.size() != B || diffuse.size() != B) {
    throw std::invalid_argument("shade: light must be [B, 3], ambient and diffuse [B]");
  }
  Array<Scalar> out(albedo.size());
  const auto& a = albedo.value();
  const auto& n = normals.value();
  for (Index b = 0; b < B; ++b) {
    const Scalar l0 = light.value()[3 * b], l1 = light.value()[3 * b + 1], l2 = light.value()[3 * b + 2];
    const Scalar ks = ambient.value()[b], kd = diffuse.value()[b];
    for (Index i = 0; i < N; ++i) {
      const Scalar dot = l0 * n[(b * 3) * N + i] + l1 * n[(b * 3 + 1) * N + i] + l2 * n[(b * 3 + 2) * N + i];
      const Scalar s = ks + kd * std::max(Scalar(0), dot);
      for (Index c = 0; c < C; ++c) out[(b * C + c) * N + i] = s * a[(b * C + c) * N + i];
    }
  }
  return Tensor<Scalar>::make_result(
      albedo.shape(), std::move(out), {albedo, normals, light, ambient, diffuse}, "shade",
      [B, C, N](detail::Node<Scalar>& self) {
        auto& pa = *self.parents[0];
        auto& pn = *self.parents[1];
        auto& pl = *self.parents[2];
        auto& pks = *self.parents[3];
        auto& pkd = *self.parents[4];
        for (Index b = 0; b < B; ++b) {
          const Vector3<Scalar> l(pl.value[3 * b], pl.value[3 * b + 1], pl.value[3 * b + 2]);
          const Scalar ks = pks.value[b], kd = pkd.value[b];
          Scalar g_ks = 0, g_kd = 0;
          Vector3<Scalar> g_l = Vector3<Scalar>::Zero();
          for (Index i = 0; i < N; ++i) {
            const Vector3<Scalar> nv(pn.value[(b * 3) * N + i], pn.value[(b * 3 + 1) * N + i],
                                     pn.value[(b * 3 + 2) * N + i]);
            const Scalar dot = l.dot(nv);
            const Scalar lit = std::max(Scalar(0), dot);
            const Scalar s = ks + kd * lit;
            Scalar g_s = 0;
            for (Index c = 0; c < C; ++c) {
              const Index o = (b * C + c) * N + i;
              g_s += self.grad[o] * pa.value[o];
              if (pa.requires_grad) pa.grad_buffer()[o] += self.grad[o] * s;
            }
            g_ks += g_s;
            g_kd += g_s * lit;
            if (dot > 0) {
              const Scalar w = g_s * kd;
              if (pn.requires_grad) {
                auto& gn = pn.grad_buffer();
                for (int c = 0; c < 3; ++c) gn[(b * 3 + c) * N + i] += w * l[c];
              }
              g_l += w * nv;
            }
          }
          if (pks.requires_grad) pks.grad_buffer()[b] += g_ks;
          if (pkd.requires_grad) pkd.grad_buffer()[b] += g_kd;
          if (pl.requires_grad) {
            auto& gl = pl.grad_buffer();
            for (int c = 0; c < 3; ++c) gl[3 * b + c] += g_l[c];
          }
        }
      });
}

#define PHOTOGEO_INSTANTIATE_PHOTOMETRIC(S)                                                 \
  template Vector3<S> light_from_angles(S, S);                                               \
  template Tensor<S> light_direction(const Tensor<S>&);                                      \
  template NormalMap<S> normals_from_depth(const Tensor<S>&, const Intrinsics<S>&);          \
  template Tensor<S> shade(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,             \
                           const Tensor<S>&, const Tensor<S>&);

PHOTOGEO_INSTANTIATE_PHOTOMETRIC(float)
PHOTOGEO_INSTANTIATE_PHOTOMETRIC(double)

}  // namespace photogeo
