// Independent reference implementations shared by the unit and acceptance
// tests. Nothing here calls into the rasterizer or the optimizer under test.
#pragma once

#include "photogeo/camera.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using Vec3 = Eigen::Vector3d;

struct DepthBuffer {
  std::vector<double> depth;  // +inf where nothing is hit
  std::vector<long> triangle;
};

// Moller-Trumbore intersection of the pixel ray with every triangle of the
// pixel mesh. Triangles are listed in the mesh order (two per quad, split on
// the main diagonal), culled when a vertex is at or behind the near plane or
// the projected triangle is not counter-clockwise, and ties keep the lower
// index.
inline DepthBuffer brute_force_zbuffer(const std::vector<double>& depth, const Eigen::Matrix3d& R,
                                       const Vec3& T, const photogeo::Intrinsics<double>& K) {
  const long W = K.width, H = K.height;
  std::vector<Vec3> X(static_cast<std::size_t>(W * H));
  for (long v = 0; v < H; ++v) {
    for (long u = 0; u < W; ++u) {
      const Vec3 ray((u - K.cu) / K.f, (v - K.cv) / K.f, 1.0);
      X[static_cast<std::size_t>(v * W + u)] = R * (depth[static_cast<std::size_t>(v * W + u)] * ray) + T;
    }
  }
  struct Tri {
    Vec3 a, b, c;
  };
  std::vector<Tri> tris;
  std::vector<bool> live;
  for (long v = 0; v + 1 < H; ++v) {
    for (long u = 0; u + 1 < W; ++u) {
      const long a = v * W + u;
      const long idx[2][3] = {{a, a + 1, a + W + 1}, {a, a + W + 1, a + W}};
      for (const auto& t : idx) {
        Tri tri{X[static_cast<std::size_t>(t[0])], X[static_cast<std::size_t>(t[1])], X[static_cast<std::size_t>(t[2])]};
        bool ok = tri.a.z() > photogeo::kNearPlane && tri.b.z() > photogeo::kNearPlane && tri.c.z() > photogeo::kNearPlane;
        if (ok) {
          auto proj = [&K](const Vec3& p) { return Eigen::Vector2d(K.f * p.x() / p.z() + K.cu, K.f * p.y() / p.z() + K.cv); };
          const auto p0 = proj(tri.a), p1 = proj(tri.b), p2 = proj(tri.c);
          const double area = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
          ok = area > 0;
        }
        tris.push_back(tri);
        live.push_back(ok);
      }
    }
  }
  DepthBuffer out;
  out.depth.assign(static_cast<std::size_t>(W * H), std::numeric_limits<double>::infinity());
  out.triangle.assign(static_cast<std::size_t>(W * H), -1);
  for (long v = 0; v < H; ++v) {
    for (long u = 0; u < W; ++u) {
      const Vec3 dir((u - K.cu) / K.f, (v - K.cv) / K.f, 1.0);
      const auto i = static_cast<std::size_t>(v * W + u);
      for (std::size_t t = 0; t < tris.size(); ++t) {
        if (!live[t]) continue;
        const Vec3 e1 = tris[t].b - tris[t].a, e2 = tris[t].c - tris[t].a;
        const Vec3 p = dir.cross(e2);
        const double det = e1.dot(p);
        if (std::abs(det) < 1e-300) continue;
        const Vec3 s = -tris[t].a;
        const double bu = s.dot(p) / det;
        const Vec3 q = s.cross(e1);
        const double bv = dir.dot(q) / det;
        if (bu < 0 || bv < 0 || bu + bv > 1) continue;
        const double dist = e2.dot(q) / det;  // ray parameter; dir.z = 1 so this is depth
        if (dist < out.depth[i]) {
          out.depth[i] = dist;
          out.triangle[i] = static_cast<long>(t);
        }
      }
    }
  }
  return out;
}

// Textbook Adam on a scalar, written out step by step.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0, v = 0;
  int t = 0;

  double update(double x, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double b1t = 1, b2t = 1;
    for (int k = 0; k < t; ++k) {
      b1t *= b1;
      b2t *= b2;
    }
    const double mhat = m / (1 - b1t);
    const double vhat = v / (1 - b2t);
    return x - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace oracle
