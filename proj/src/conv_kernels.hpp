#pragma once

#include "photogeo/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <utility>

namespace photogeo {

// Geometry of a square-kernel 2-d convolution over one [C, H, W] image.
struct ConvGeometry {
  Index channels, height, width, kernel, stride, pad, out_height, out_width;

  static ConvGeometry make(Index c, Index h, Index w, Index k, Index s, Index p) {
    if (k < 1 || s < 1 || p < 0) throw std::invalid_argument("bad convolution geometry");
    const Index oh = (h + 2 * p - k) / s + 1;
    const Index ow = (w + 2 * p - k) / s + 1;
    if (oh < 1 || ow < 1) throw std::invalid_argument("convolution output is empty");
    return {c, h, w, k, s, p, oh, ow};
  }
  Index patch() const { return channels * kernel * kernel; }
  // Output columns [lo, hi) whose input column ox * stride - pad + kx is inside the image.
  std::pair<Index, Index> valid_columns(Index kx) const {
    const Index off = kx - pad;
    const Index lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
    const Index hi = std::min(out_width, off >= width ? Index(0) : (width - 1 - off) / stride + 1);
    return {std::min(lo, out_width), std::max(std::min(lo, out_width), hi)};
  }
};

// col has one row per (channel, ky, kx) and one column per output pixel.
template <typename Scalar>
void im2col(const Scalar* image, const ConvGeometry& g,
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& col) {
  col.resize(g.patch(), g.out_height * g.out_width);
  Index row = 0;
  for (Index c = 0; c < g.channels; ++c) {
    const Scalar* plane = image + c * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx, ++row) {
        Scalar* dst = col.data() + row * col.cols();
        for (Index oy = 0; oy < g.out_height; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          Scalar* d = dst + oy * g.out_width;
          if (iy < 0 || iy >= g.height) {
            std::fill(d, d + g.out_width, Scalar(0));
            continue;
          }
          const Scalar* src = plane + iy * g.width + kx - g.pad;
          const auto [lo, hi] = g.valid_columns(kx);
          std::fill(d, d + lo, Scalar(0));
          if (g.stride == 1) {
            std::copy(src + lo, src + hi, d + lo);
          } else {
            for (Index ox = lo; ox < hi; ++ox) d[ox] = src[ox * g.stride];
          }
          std::fill(d + hi, d + g.out_width, Scalar(0));
        }
      }
    }
  }
}

// Scatter-adds col back onto the image; the adjoint of im2col.
template <typename Scalar>
void col2im(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& col,
            const ConvGeometry& g, Scalar* image) {
  Index row = 0;
  for (Index c = 0; c < g.channels; ++c) {
    Scalar* plane = image + c * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx, ++row) {
        const Scalar* src = col.data() + row * col.cols();
        for (Index oy = 0; oy < g.out_height; ++oy) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          Scalar* dst = plane + iy * g.width + kx - g.pad;
          const Scalar* s = src + oy * g.out_width;
          const auto [lo, hi] = g.valid_columns(kx);
          if (g.stride == 1) {
            for (Index ox = lo; ox < hi; ++ox) dst[ox] += s[ox];
          } else {
            for (Index ox = lo; ox < hi; ++ox) dst[ox * g.stride] += s[ox];
          }
        }
      }
    }
  }
}

}  // namespace photogeo
