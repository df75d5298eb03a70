#pragma once

#include "photogeo/camera.hpp"
#include "photogeo/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace photogeo {

/// One vertex per pixel, two triangles per 2x2 quad. The quad at (u, v) is
/// split along its (u, v)-(u+1, v+1) diagonal into
///   2q:     (u, v), (u+1, v), (u+1, v+1)
///   2q + 1: (u, v), (u+1, v+1), (u, v+1)
/// with q = v (W - 1) + u. Both are counter-clockwise in pixel coordinates
/// (positive signed area with y down) when seen from the canonical camera.
template <typename Scalar>
struct PixelMesh {
  Index width = 0;
  Index height = 0;
  std::vector<Vector3<Scalar>> vertices;
  std::vector<std::array<Index, 3>> triangles;
};

std::array<Index, 3> quad_triangle(Index width, Index triangle);
inline Index triangle_count(Index width, Index height) {
  return 2 * (width - 1) * (height - 1);
}

/// depth holds W * H values in raster order.
template <typename Scalar>
PixelMesh<Scalar> tessellate(const Scalar* depth, const Intrinsics<Scalar>& K);

/// ASCII PLY with one vertex per pixel and the triangle list.
template <typename Scalar>
void write_ply(const std::filesystem::path& path, const PixelMesh<Scalar>& mesh);

/// Hard z-buffer of a mesh after a rigid transform. Untouched pixels keep
/// +inf depth and triangle -1. Triangles with a vertex at or behind the near
/// plane, and triangles that appear back-facing, are skipped. Ties in depth
/// resolve to the lower triangle index.
template <typename Scalar>
struct ZBuffer {
  Index width = 0;
  Index height = 0;
  std::vector<Scalar> depth;
  std::vector<std::int64_t> triangle;

  bool covered(Index i) const { return triangle[static_cast<std::size_t>(i)] >= 0; }
};

template <typename Scalar>
ZBuffer<Scalar> rasterize_mesh(const PixelMesh<Scalar>& mesh, const Matrix3<Scalar>& R,
                               const Vector3<Scalar>& T, const Intrinsics<Scalar>& K);

/// Depth seen from the actual viewpoint.
template <typename Scalar>
struct RenderedDepth {
  Tensor<Scalar> depth;                 // [B, 1, H, W]
  std::vector<std::uint8_t> coverage;   // pixel hit by a triangle
  std::vector<std::uint8_t> observed;   // covered or hole-filled
  std::vector<std::int64_t> source;     // pixel whose triangle supplies the depth, -1 if none
  std::vector<std::int64_t> triangle;   // triangle hit at the source pixel
  std::vector<Scalar> edge_margin;      // distance in px from the pixel to its triangle's edges
  std::vector<std::uint8_t> degenerate; // per sample: nothing covered
};

/// Tessellates each depth map, moves it by the pose and rasterizes it.
/// Disocclusion holes take the depth of the nearest covered pixel (4-neighbour
/// breadth-first order). Gradients reach the depth map and the pose through
/// the ray / triangle-plane intersection; coverage itself is not
/// differentiated.
template <typename Scalar>
RenderedDepth<Scalar> rasterize_depth(const Tensor<Scalar>& depth, const Tensor<Scalar>& pose,
                                      const Intrinsics<Scalar>& K, bool fill_holes = true);

template <typename Scalar>
struct Sampled {
  Tensor<Scalar> image;                 // [B, C, Ho, Wo]
  std::vector<std::uint8_t> in_bounds;  // per (b, pixel)
};

/// Bilinear gather of image [B, C, H, W] at the warp coordinates. Pixels with
/// invalid or out-of-image coordinates are zero; taps beyond the border
/// contribute zero.
template <typename Scalar>
Sampled<Scalar> bilinear_sample(const Tensor<Scalar>& image, const WarpField<Scalar>& coords);

template <typename Scalar>
struct Reprojection {
  Tensor<Scalar> image;          // cropped [B, C, h, w]
  RenderedDepth<Scalar> rendered;
  WarpField<Scalar> warp;
  Sampled<Scalar> sampled;       // full padded grid
  Index degenerate_samples = 0;
};

/// Warps the canonical image into the actual view using the depth rendered
/// from that view, then crops the centered out_width x out_height window.
/// canonical [B, C, H, W] and depth [B, 1, H, W] live on the grid of K.
template <typename Scalar>
Reprojection<Scalar> reproject(const Tensor<Scalar>& canonical, const Tensor<Scalar>& depth,
                               const Tensor<Scalar>& pose, const Intrinsics<Scalar>& K,
                               Index out_width, Index out_height);

}  // namespace photogeo
