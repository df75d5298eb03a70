#include "photogeo/renderer.hpp"

#include "photogeo/ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace photogeo {

std::array<Index, 3> quad_triangle(Index width, Index triangle) {
  const Index q = triangle / 2;
  const Index u = q % (width - 1), v = q / (width - 1);
  const Index a = v * width + u;
  const Index b = a + 1;
  const Index c = a + width + 1;
  const Index d = a + width;
  return (triangle % 2 == 0) ? std::array<Index, 3>{a, b, c} : std::array<Index, 3>{a, c, d};
}

template <typename Scalar>
PixelMesh<Scalar> tessellate(const Scalar* depth, const Intrinsics<Scalar>& K) {
  PixelMesh<Scalar> mesh;
  mesh.width = K.width;
  mesh.height = K.height;
  mesh.vertices.reserve(static_cast<std::size_t>(K.width * K.height));
  for (Index v = 0; v < K.height; ++v)
    for (Index u = 0; u < K.width; ++u)
      mesh.vertices.push_back(unproject(K, Scalar(u), Scalar(v), depth[v * K.width + u]));
  const Index nt = triangle_count(K.width, K.height);
  mesh.triangles.reserve(static_cast<std::size_t>(nt));
  for (Index t = 0; t < nt; ++t) mesh.triangles.push_back(quad_triangle(K.width, t));
  return mesh;
}

template <typename Scalar>
void write_ply(const std::filesystem::path& path, const PixelMesh<Scalar>& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.precision(9);
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << mesh.vertices.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  os << "element face " << mesh.triangles.size() << "\n";
  os << "property list uchar int vertex_indices\nend_header\n";
  for (const auto& v : mesh.vertices) os << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

namespace {

template <typename Scalar>
Scalar cross2(const Vector2<Scalar>& a, const Vector2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

}  // namespace

template <typename Scalar>
ZBuffer<Scalar> rasterize_mesh(const PixelMesh<Scalar>& mesh, const Matrix3<Scalar>& R,
                               const Vector3<Scalar>& T, const Intrinsics<Scalar>& K) {
  ZBuffer<Scalar> zb;
  zb.width = K.width;
  zb.height = K.height;
  const std::size_t npix = static_cast<std::size_t>(K.width * K.height);
  zb.depth.assign(npix, std::numeric_limits<Scalar>::infinity());
  zb.triangle.assign(npix, -1);

  const std::size_t nv = mesh.vertices.size();
  std::vector<Vector3<Scalar>> X(nv);
  std::vector<Vector2<Scalar>> s(nv);
  std::vector<std::uint8_t> front(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    X[i] = R * mesh.vertices[i] + T;
    front[i] = X[i].z() > Scalar(kNearPlane);
    if (front[i]) s[i] = K.project(X[i]);
  }

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto i0 = static_cast<std::size_t>(tri[0]), i1 = static_cast<std::size_t>(tri[1]),
               i2 = static_cast<std::size_t>(tri[2]);
    if (!front[i0] || !front[i1] || !front[i2]) continue;
    const Vector2<Scalar>& s0 = s[i0];
    const Vector2<Scalar>& s1 = s[i1];
    const Vector2<Scalar>& s2 = s[i2];
    if (!(cross2<Scalar>(s1 - s0, s2 - s0) > 0)) continue;

    const Scalar xmin = std::min({s0.x(), s1.x(), s2.x()});
    const Scalar xmax = std::max({s0.x(), s1.x(), s2.x()});
    const Scalar ymin = std::min({s0.y(), s1.y(), s2.y()});
    const Scalar ymax = std::max({s0.y(), s1.y(), s2.y()});
    if (xmax < 0 || ymax < 0 || xmin > Scalar(K.width - 1) || ymin > Scalar(K.height - 1)) continue;
    const Index x0 = std::max<Index>(0, static_cast<Index>(std::ceil(xmin)));
    const Index x1 = std::min<Index>(K.width - 1, static_cast<Index>(std::floor(xmax)));
    const Index y0 = std::max<Index>(0, static_cast<Index>(std::ceil(ymin)));
    const Index y1 = std::min<Index>(K.height - 1, static_cast<Index>(std::floor(ymax)));
    if (x0 > x1 || y0 > y1) continue;

    const Vector3<Scalar> N = (X[i1] - X[i0]).cross(X[i2] - X[i0]);
    const Scalar num = N.dot(X[i0]);
    for (Index y = y0; y <= y1; ++y) {
      for (Index x = x0; x <= x1; ++x) {
        const Vector2<Scalar> p{Scalar(x), Scalar(y)};
        if (cross2<Scalar>(s2 - s1, p - s1) < 0 || cross2<Scalar>(s0 - s2, p - s2) < 0 ||
            cross2<Scalar>(s1 - s0, p - s0) < 0) {
          continue;
        }
        const Scalar z = num / N.dot(K.ray(p.x(), p.y()));
        const auto pix = static_cast<std::size_t>(y * K.width + x);
        if (z < zb.depth[pix]) {
          zb.depth[pix] = z;
          zb.triangle[pix] = static_cast<std::int64_t>(t);
        }
      }
    }
  }
  return zb;
}

namespace {

// Breadth-first propagation of covered pixels into holes; returns, per
// pixel, the covered pixel that supplies its depth (or -1 with no coverage).
std::vector<std::int64_t> nearest_covered(const std::vector<std::int64_t>& triangle, Index width,
                                          Index height) {
  const std::size_t n = triangle.size();
  std::vector<std::int64_t> src(n, -1);
  std::deque<Index> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (triangle[i] >= 0) {
      src[i] = static_cast<std::int64_t>(i);
      queue.push_back(static_cast<Index>(i));
    }
  }
  while (!queue.empty()) {
    const Index p = queue.front();
    queue.pop_front();
    const Index x = p % width, y = p / width;
    const Index nb[4][2] = {{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}};
    for (const auto& q : nb) {
      if (q[0] < 0 || q[1] < 0 || q[0] >= width || q[1] >= height) continue;
      const auto qi = static_cast<std::size_t>(q[1] * width + q[0]);
      if (src[qi] >= 0) continue;
      src[qi] = src[static_cast<std::size_t>(p)];
      queue.push_back(static_cast<Index>(qi));
    }
  }
  return src;
}

template <typename Scalar>
Scalar edge_distance(const Vector2<Scalar>& a, const Vector2<Scalar>& b, const Vector2<Scalar>& p) {
  return cross2<Scalar>(b - a, p - a) / (b - a).norm();
}

}  // namespace

template <typename Scalar>
RenderedDepth<Scalar> rasterize_depth(const Tensor<Scalar>& depth, const Tensor<Scalar>& pose,
                                      const Intrinsics<Scalar>& K, bool fill_holes) {
  if (depth.ndim() != 4 || depth.dim(1) != 1 || depth.dim(2) != K.height ||
      depth.dim(3) != K.width) {
    throw std::invalid_argument("rasterize_depth: depth must be [B, 1, H, W] on the grid of K");
  }
  if (pose.ndim() != 2 || pose.dim(0) != depth.dim(0) || pose.dim(1) != 6) {
    throw std::invalid_argument("rasterize_depth: pose must be [B, 6]");
  }
  const Index B = depth.dim(0), W = K.width, H = K.height, N = W * H;
  if ((depth.value() <= Scalar(0)).any()) {
    throw std::invalid_argument("rasterize_depth: depth must be strictly positive");
  }
  RenderedDepth<Scalar> out;
  const auto total = static_cast<std::size_t>(B * N);
  out.coverage.assign(total, 0);
  out.observed.assign(total, 0);
  out.source.assign(total, -1);
  out.triangle.assign(total, -1);
  out.edge_margin.assign(total, Scalar(0));
  out.degenerate.assign(static_cast<std::size_t>(B), 0);
  Array<Scalar> values = Array<Scalar>::Zero(B * N);

  for (Index b = 0; b < B; ++b) {
    const auto mesh = tessellate(depth.value().data() + b * N, K);
    const auto [R, T] = pose_at(pose, b);
    const auto zb = rasterize_mesh(mesh, R, T, K);
    std::vector<std::int64_t> src;
    if (fill_holes) {
      src = nearest_covered(zb.triangle, W, H);
    } else {
      src.resize(static_cast<std::size_t>(N));
      for (Index i = 0; i < N; ++i) src[static_cast<std::size_t>(i)] = zb.covered(i) ? i : -1;
    }
    bool any = false;
    for (Index i = 0; i < N; ++i) {
      const auto o = static_cast<std::size_t>(b * N + i);
      const auto ii = static_cast<std::size_t>(i);
      out.coverage[o] = zb.covered(i);
      any = any || zb.covered(i);
      const std::int64_t s = src[ii];
      out.source[o] = s;
      if (s < 0) continue;
      const auto si = static_cast<std::size_t>(s);
      out.observed[o] = 1;
      out.triangle[o] = zb.triangle[si];
      values[b * N + i] = zb.depth[si];
      if (zb.covered(i)) {
        const auto& tri = mesh.triangles[static_cast<std::size_t>(zb.triangle[ii])];
        Vector2<Scalar> sp[3];
        for (int k = 0; k < 3; ++k) sp[k] = K.project(R * mesh.vertices[static_cast<std::size_t>(tri[k])] + T);
        const Vector2<Scalar> p(Scalar(i % W), Scalar(i / W));
        out.edge_margin[o] = std::min({edge_distance(sp[0], sp[1], p), edge_distance(sp[1], sp[2], p),
                                       edge_distance(sp[2], sp[0], p)});
      }
    }
    out.degenerate[static_cast<std::size_t>(b)] = !any;
  }

  const auto source = out.source;
  const auto triangle = out.triangle;
  out.depth = Tensor<Scalar>::make_result(
      {B, 1, H, W}, std::move(values), {depth, pose}, "rasterize_depth",
      [K, B, W, N, source, triangle](detail::Node<Scalar>& self) {
        auto& pd = *self.parents[0];
        auto& pp = *self.parents[1];
        for (Index b = 0; b < B; ++b) {
          const Vector3<Scalar> rv = Eigen::Map<const Vector3<Scalar>>(pp.value.data() + 6 * b);
          const Vector3<Scalar> T = Eigen::Map<const Vector3<Scalar>>(pp.value.data() + 6 * b + 3);
          const Matrix3<Scalar> R = so3_exp(rv);
          Matrix3<Scalar> gR = Matrix3<Scalar>::Zero();
          Vector3<Scalar> gT = Vector3<Scalar>::Zero();
          for (Index i = 0; i < N; ++i) {
            const auto o = static_cast<std::size_t>(b * N + i);
            const Scalar gz = self.grad[b * N + i];
            if (gz == 0 || source[o] < 0) continue;
            const auto tri = quad_triangle(W, triangle[o]);
            Vector3<Scalar> r[3], X[3];
            Scalar d[3];
            for (int k = 0; k < 3; ++k) {
              r[k] = K.ray(Scalar(tri[k] % W), Scalar(tri[k] / W));
              d[k] = pd.value[b * N + tri[k]];
              X[k] = R * (d[k] * r[k]) + T;
            }
            const Index s = source[o];
            const Vector3<Scalar> ray = K.ray(Scalar(s % W), Scalar(s / W));
            const Vector3<Scalar> e1 = X[1] - X[0], e2 = X[2] - X[0];
            const Vector3<Scalar> Nrm = e1.cross(e2);
            const Scalar num = Nrm.dot(X[0]);
            const Scalar den = Nrm.dot(ray);
            // z = (N . X0) / (N . ray)
            const Vector3<Scalar> gN = (gz / den) * X[0] - (gz * num / (den * den)) * ray;
            Vector3<Scalar> gX[3];
            gX[1] = e2.cross(gN);
            gX[2] = gN.cross(e1);
            gX[0] = (gz / den) * Nrm - gX[1] - gX[2];
            for (int k = 0; k < 3; ++k) {
              if (pd.requires_grad) pd.grad_buffer()[b * N + tri[k]] += (R * r[k]).dot(gX[k]);
              gT += gX[k];
              gR += gX[k] * (d[k] * r[k]).transpose();
            }
          }
          if (pp.requires_grad) {
            Eigen::Map<Vector6<Scalar>>(pp.grad_buffer().data() + 6 * b) +=
                pose_gradient<Scalar>(rv, gR, gT);
          }
        }
      });
  return out;
}

template <typename Scalar>
Sampled<Scalar> bilinear_sample(const Tensor<Scalar>& image, const WarpField<Scalar>& coords) {
  if (image.ndim() != 4) throw std::invalid_argument("bilinear_sample: image must be [B, C, H, W]");
  const Index B = image.dim(0), C = image.dim(1), H = image.dim(2), W = image.dim(3);
  const Tensor<Scalar>& grid = coords.coords;
  if (grid.ndim() != 4 || grid.dim(0) != B || grid.dim(1) != 2) {
    throw std::invalid_argument("bilinear_sample: coordinates must be [B, 2, Ho, Wo]");
  }
  const Index Ho = grid.dim(2), Wo = grid.dim(3), No = Ho * Wo, N = H * W;
  if (!coords.valid.empty() && static_cast<Index>(coords.valid.size()) != B * No) {
    throw std::invalid_argument("bilinear_sample: validity mask has wrong size");
  }
  std::vector<std::uint8_t> inside(static_cast<std::size_t>(B * No), 0);
  Array<Scalar> out = Array<Scalar>::Zero(B * C * No);
  const auto& img = image.value();
  const auto& g = grid.value();
  auto tap = [&](Index b, Index c, Index x, Index y) -> Scalar {
    if (x < 0 || y < 0 || x >= W || y >= H) return 0;
    return img[(b * C + c) * N + y * W + x];
  };
  for (Index b = 0; b < B; ++b) {
    for (Index i = 0; i < No; ++i) {
      const auto o = static_cast<std::size_t>(b * No + i);
      if (!coords.valid.empty() && !coords.valid[o]) continue;
      const Scalar u = g[(b * 2) * No + i], v = g[(b * 2 + 1) * No + i];
      if (!(u >= 0 && v >= 0 && u <= Scalar(W - 1) && v <= Scalar(H - 1))) continue;
      inside[o] = 1;
      const Index x0 = static_cast<Index>(std::floor(u)), y0 = static_cast<Index>(std::floor(v));
      const Scalar fx = u - Scalar(x0), fy = v - Scalar(y0);
      for (Index c = 0; c < C; ++c) {
        out[(b * C + c) * No + i] =
            (1 - fy) * ((1 - fx) * tap(b, c, x0, y0) + fx * tap(b, c, x0 + 1, y0)) +
            fy * ((1 - fx) * tap(b, c, x0, y0 + 1) + fx * tap(b, c, x0 + 1, y0 + 1));
      }
    }
  }
  auto result = Tensor<Scalar>::make_result(
      {B, C, Ho, Wo}, std::move(out), {image, grid}, "bilinear_sample",
      [B, C, H, W, N, No, inside](detail::Node<Scalar>& self) {
        auto& pi = *self.parents[0];
        auto& pg = *self.parents[1];
        for (Index b = 0; b < B; ++b) {
          for (Index i = 0; i < No; ++i) {
            if (!inside[static_cast<std::size_t>(b * No + i)]) continue;
            const Scalar u = pg.value[(b * 2) * No + i], v = pg.value[(b * 2 + 1) * No + i];
            const Index x0 = static_cast<Index>(std::floor(u)), y0 = static_cast<Index>(std::floor(v));
            const Scalar fx = u - Scalar(x0), fy = v - Scalar(y0);
            const Index xs[2] = {x0, x0 + 1}, ys[2] = {y0, y0 + 1};
            const Scalar wx[2] = {1 - fx, fx}, wy[2] = {1 - fy, fy};
            Scalar gu = 0, gv = 0;
            for (Index c = 0; c < C; ++c) {
              const Scalar go = self.grad[(b * C + c) * No + i];
              if (go == 0) continue;
              Scalar t[2][2];
              for (int yy = 0; yy < 2; ++yy) {
                for (int xx = 0; xx < 2; ++xx) {
                  const bool in = xs[xx] >= 0 && ys[yy] >= 0 && xs[xx] < W && ys[yy] < H;
                  const Index idx = (b * C + c) * N + ys[yy] * W + xs[xx];
                  t[yy][xx] = in ? pi.value[idx] : Scalar(0);
                  if (in && pi.requires_grad) pi.grad_buffer()[idx] += go * wy[yy] * wx[xx];
                }
              }
              gu += go * (wy[0] * (t[0][1] - t[0][0]) + wy[1] * (t[1][1] - t[1][0]));
              gv += go * (wx[0] * (t[1][0] - t[0][0]) + wx[1] * (t[1][1] - t[0][1]));
            }
            if (pg.requires_grad) {
              auto& gg = pg.grad_buffer();
              gg[(b * 2) * No + i] += gu;
              gg[(b * 2 + 1) * No + i] += gv;
            }
          }
        }
      });
  return {std::move(result), std::move(inside)};
}

template <typename Scalar>
Reprojection<Scalar> reproject(const Tensor<Scalar>& canonical, const Tensor<Scalar>& depth,
                               const Tensor<Scalar>& pose, const Intrinsics<Scalar>& K,
                               Index out_width, Index out_height) {
  if (canonical.ndim() != 4 || canonical.dim(0) != depth.dim(0) ||
      canonical.dim(2) != K.height || canonical.dim(3) != K.width) {
    throw std::invalid_argument("reproject: canonical image must be [B, C, H, W] on the grid of K");
  }
  Reprojection<Scalar> r;
  r.rendered = rasterize_depth(depth, pose, K);
  r.warp = inverse_warp_field(r.rendered.depth, pose, K, r.rendered.observed);
  r.sampled = bilinear_sample(canonical, r.warp);
  r.image = crop_center(r.sampled.image, out_height, out_width);
  r.degenerate_samples = std::count(r.rendered.degenerate.begin(), r.rendered.degenerate.end(), 1);
  return r;
}

#define PHOTOGEO_INSTANTIATE_RENDERER(S)                                                        \
  template PixelMesh<S> tessellate(const S*, const Intrinsics<S>&);                              \
  template void write_ply(const std::filesystem::path&, const PixelMesh<S>&);                   \
  template ZBuffer<S> rasterize_mesh(const PixelMesh<S>&, const Matrix3<S>&, const Vector3<S>&, \
                                     const Intrinsics<S>&);                                     \
  template RenderedDepth<S> rasterize_depth(const Tensor<S>&, const Tensor<S>&,                 \
                                            const Intrinsics<S>&, bool);                        \
  template Sampled<S> bilinear_sample(const Tensor<S>&, const WarpField<S>&);                   \
  template Reprojection<S> reproject(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,      \
                                     const Intrinsics<S>&, Index, Index);

PHOTOGEO_INSTANTIATE_RENDERER(float)
PHOTOGEO_INSTANTIATE_RENDERER(double)

}  // namespace photogeo
