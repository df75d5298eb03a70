#include "photogeo/ops.hpp"

#include "conv_kernels.hpp"

#include <cmath>

namespace photogeo {

namespace {

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

template <typename Scalar>
void require_ndim(const Tensor<Scalar>& x, std::size_t n, const char* op) {
  if (x.ndim() != n) {
    throw std::invalid_argument(std::string(op) + ": expected " +
                                std::to_string(n) + "-d tensor, got " +
                                shape_string(x.shape()));
  }
}

// f maps the input array to the output; df(x, y) gives dy/dx elementwise.
template <typename Scalar, typename F, typename DF>
Tensor<Scalar> unary(const Tensor<Scalar>& x, std::string_view name, F f,
                     DF df) {
  Array<Scalar> y = f(x.value());
  return Tensor<Scalar>::make_result(
      x.shape(), std::move(y), {x}, name, [df](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        in.accumulate(self.grad * df(in.value, self.value));
      });
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "add");
  return Tensor<Scalar>::make_result(
      a.shape(), a.value() + b.value(), {a, b}, "add",
      [](detail::Node<Scalar>& self) {
        self.parents[0]->accumulate(self.grad);
        self.parents[1]->accumulate(self.grad);
      });
}

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "sub");
  return Tensor<Scalar>::make_result(
      a.shape(), a.value() - b.value(), {a, b}, "sub",
      [](detail::Node<Scalar>& self) {
        self.parents[0]->accumulate(self.grad);
        self.parents[1]->accumulate(-self.grad);
      });
}

template <typename Scalar>
Tensor<Scalar> mul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "mul");
  return Tensor<Scalar>::make_result(
      a.shape(), a.value() * b.value(), {a, b}, "mul",
      [](detail::Node<Scalar>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.accumulate(self.grad * pb.value);
        pb.accumulate(self.grad * pa.value);
      });
}

template <typename Scalar>
Tensor<Scalar> div(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "div");
  return Tensor<Scalar>::make_result(
      a.shape(), a.value() / b.value(), {a, b}, "div",
      [](detail::Node<Scalar>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.accumulate(self.grad / pb.value);
        pb.accumulate(-self.grad * self.value / pb.value);
      });
}

template <typename Scalar>
Tensor<Scalar> affine(const Tensor<Scalar>& x, Scalar scale, Scalar shift) {
  return unary(
      x, "affine", [=](const Array<Scalar>& v) { return Array<Scalar>(scale * v + shift); },
      [=](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>::Constant(v.size(), scale);
      });
}

template <typename Scalar>
Tensor<Scalar> neg(const Tensor<Scalar>& x) {
  return affine(x, Scalar(-1), Scalar(0));
}

template <typename Scalar>
Tensor<Scalar> abs(const Tensor<Scalar>& x) {
  return unary(
      x, "abs", [](const Array<Scalar>& v) { return Array<Scalar>(v.abs()); },
      [](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>(v.sign());
      });
}

template <typename Scalar>
Tensor<Scalar> square(const Tensor<Scalar>& x) {
  return unary(
      x, "square", [](const Array<Scalar>& v) { return Array<Scalar>(v.square()); },
      [](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>(Scalar(2) * v);
      });
}

template <typename Scalar>
Tensor<Scalar> sqrt(const Tensor<Scalar>& x) {
  return unary(
      x, "sqrt", [](const Array<Scalar>& v) { return Array<Scalar>(v.sqrt()); },
      [](const Array<Scalar>&, const Array<Scalar>& y) {
        return Array<Scalar>(Scalar(0.5) / y);
      });
}

template <typename Scalar>
Tensor<Scalar> exp(const Tensor<Scalar>& x) {
  return unary(
      x, "exp", [](const Array<Scalar>& v) { return Array<Scalar>(v.exp()); },
      [](const Array<Scalar>&, const Array<Scalar>& y) { return y; });
}

template <typename Scalar>
Tensor<Scalar> log(const Tensor<Scalar>& x) {
  return unary(
      x, "log", [](const Array<Scalar>& v) { return Array<Scalar>(v.log()); },
      [](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>(v.inverse());
      });
}

template <typename Scalar>
Tensor<Scalar> tanh(const Tensor<Scalar>& x) {
  return unary(
      x, "tanh", [](const Array<Scalar>& v) { return Array<Scalar>(v.tanh()); },
      [](const Array<Scalar>&, const Array<Scalar>& y) {
        return Array<Scalar>(Scalar(1) - y.square());
      });
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  return unary(
      x, "sigmoid",
      [](const Array<Scalar>& v) {
        return Array<Scalar>(Scalar(1) / (Scalar(1) + (-v).exp()));
      },
      [](const Array<Scalar>&, const Array<Scalar>& y) {
        return Array<Scalar>(y * (Scalar(1) - y));
      });
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return unary(
      x, "relu", [](const Array<Scalar>& v) { return Array<Scalar>(v.max(Scalar(0))); },
      [](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>((v > Scalar(0)).template cast<Scalar>());
      });
}

template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& x, Scalar slope) {
  return unary(
      x, "leaky_relu",
      [=](const Array<Scalar>& v) {
        return Array<Scalar>((v > Scalar(0)).select(v, slope * v));
      },
      [=](const Array<Scalar>& v, const Array<Scalar>&) {
        return Array<Scalar>((v > Scalar(0)).select(Array<Scalar>::Ones(v.size()),
                                                    Array<Scalar>::Constant(v.size(), slope)));
      });
}

template <typename Scalar>
Tensor<Scalar> sum(const Tensor<Scalar>& x) {
  Array<Scalar> out(1);
  out[0] = x.value().sum();
  return Tensor<Scalar>::make_result({}, std::move(out), {x}, "sum",
                                     [](detail::Node<Scalar>& self) {
                                       auto& in = *self.parents[0];
                                       in.grad_buffer() += self.grad[0];
                                     });
}

template <typename Scalar>
Tensor<Scalar> mean(const Tensor<Scalar>& x) {
  if (x.size() == 0) throw std::invalid_argument("mean of empty tensor");
  Array<Scalar> out(1);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(x.size());
  out[0] = x.value().sum() * inv;
  return Tensor<Scalar>::make_result({}, std::move(out), {x}, "mean",
                                     [inv](detail::Node<Scalar>& self) {
                                       auto& in = *self.parents[0];
                                       in.grad_buffer() += self.grad[0] * inv;
                                     });
}

template <typename Scalar>
Tensor<Scalar> batch_mean(const Tensor<Scalar>& x) {
  if (x.ndim() < 1 || x.dim(0) < 1) {
    throw std::invalid_argument("batch_mean needs a non-empty batch axis");
  }
  const Index batch = x.dim(0);
  const Index inner = x.size() / batch;
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> m(x.value().data(), batch, inner);
  Array<Scalar> out = (m.colwise().sum() / static_cast<Scalar>(batch)).transpose().array();
  Shape shape(x.shape().begin() + 1, x.shape().end());
  return Tensor<Scalar>::make_result(
      shape, std::move(out), {x}, "batch_mean",
      [batch, inner](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        const Scalar inv = Scalar(1) / static_cast<Scalar>(batch);
        for (Index b = 0; b < batch; ++b) {
          g.segment(b * inner, inner) += self.grad * inv;
        }
      });
}

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw std::invalid_argument("reshape " + shape_string(x.shape()) + " -> " +
                                shape_string(shape));
  }
  return Tensor<Scalar>::make_result(std::move(shape), x.value(), {x}, "reshape",
                                     [](detail::Node<Scalar>& self) {
                                       self.parents[0]->accumulate(self.grad);
                                     });
}

template <typename Scalar>
Tensor<Scalar> columns(const Tensor<Scalar>& x, Index start, Index count) {
  require_ndim(x, 2, "columns");
  const Index rows = x.dim(0), cols = x.dim(1);
  if (start < 0 || count < 0 || start + count > cols) {
    throw std::out_of_range("columns: range outside tensor");
  }
  Array<Scalar> out(rows * count);
  for (Index r = 0; r < rows; ++r) {
    out.segment(r * count, count) = x.value().segment(r * cols + start, count);
  }
  return Tensor<Scalar>::make_result(
      {rows, count}, std::move(out), {x}, "columns",
      [rows, cols, start, count](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        for (Index r = 0; r < rows; ++r) {
          g.segment(r * cols + start, count) += self.grad.segment(r * count, count);
        }
      });
}

template <typename Scalar>
Tensor<Scalar> concat_columns(const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_columns: no inputs");
  const Index rows = parts.front().dim(0);
  std::vector<Index> widths;
  Index total = 0;
  for (const auto& p : parts) {
    require_ndim(p, 2, "concat_columns");
    if (p.dim(0) != rows) throw std::invalid_argument("concat_columns: row mismatch");
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  Array<Scalar> out(rows * total);
  Index off = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (Index r = 0; r < rows; ++r) {
      out.segment(r * total + off, widths[i]) =
          parts[i].value().segment(r * widths[i], widths[i]);
    }
    off += widths[i];
  }
  return Tensor<Scalar>::make_result(
      {rows, total}, std::move(out), parts, "concat_columns",
      [rows, total, widths](detail::Node<Scalar>& self) {
        Index off = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
          auto& in = *self.parents[i];
          if (in.requires_grad) {
            auto& g = in.grad_buffer();
            for (Index r = 0; r < rows; ++r) {
              g.segment(r * widths[i], widths[i]) +=
                  self.grad.segment(r * total + off, widths[i]);
            }
          }
          off += widths[i];
        }
      });
}

template <typename Scalar>
Tensor<Scalar> concat_channels(const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: nothing to concatenate");
  const Shape& s0 = parts.front().shape();
  std::vector<Tensor<Scalar>> flat;
  Index channels = 0;
  for (const auto& p : parts) {
    require_ndim(p, 4, "concat_channels");
    if (p.dim(0) != s0[0] || p.dim(2) != s0[2] || p.dim(3) != s0[3]) {
      throw std::invalid_argument("concat_channels: batch or spatial size differs");
    }
    channels += p.dim(1);
    flat.push_back(reshape(p, {s0[0], p.size() / s0[0]}));
  }
  return reshape(concat_columns(flat), {s0[0], channels, s0[2], s0[3]});
}

template <typename Scalar>
Tensor<Scalar> crop_center(const Tensor<Scalar>& x, Index height, Index width) {
  require_ndim(x, 4, "crop_center");
  const Shape s = x.shape();
  if (height > s[2] || width > s[3] || (s[2] - height) % 2 || (s[3] - width) % 2) {
    throw std::invalid_argument("crop_center: window must be centered inside " +
                                shape_string(s));
  }
  const Index oy = (s[2] - height) / 2, ox = (s[3] - width) / 2;
  const Shape os{s[0], s[1], height, width};
  Array<Scalar> out(shape_size(os));
  for (Index n = 0; n < s[0]; ++n)
    for (Index c = 0; c < s[1]; ++c)
      for (Index h = 0; h < height; ++h)
        out.segment(offset4(os, n, c, h, 0), width) =
            x.value().segment(offset4(s, n, c, h + oy, ox), width);
  return Tensor<Scalar>::make_result(
      os, std::move(out), {x}, "crop_center",
      [s, os, oy, ox](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        for (Index n = 0; n < os[0]; ++n)
          for (Index c = 0; c < os[1]; ++c)
            for (Index h = 0; h < os[2]; ++h)
              g.segment(offset4(s, n, c, h + oy, ox), os[3]) +=
                  self.grad.segment(offset4(os, n, c, h, 0), os[3]);
      });
}

template <typename Scalar>
Tensor<Scalar> hflip_samples(const Tensor<Scalar>& x, const std::vector<bool>& flags) {
  if (x.ndim() < 2) throw std::invalid_argument("hflip needs a batch axis and a width axis");
  const Index batch = x.dim(0);
  if (static_cast<Index>(flags.size()) != batch) {
    throw std::invalid_argument("hflip_samples: one flag per batch entry required");
  }
  const Index width = x.shape().back();
  const Index per_sample = x.size() / batch;
  const Index rows = per_sample / width;
  auto apply = [=](const Array<Scalar>& src, Array<Scalar>& dst) {
    for (Index b = 0; b < batch; ++b) {
      const Index base = b * per_sample;
      if (!flags[b]) {
        dst.segment(base, per_sample) += src.segment(base, per_sample);
        continue;
      }
      for (Index r = 0; r < rows; ++r)
        dst.segment(base + r * width, width) += src.segment(base + r * width, width).reverse();
    }
  };
  Array<Scalar> out = Array<Scalar>::Zero(x.size());
  apply(x.value(), out);
  return Tensor<Scalar>::make_result(x.shape(), std::move(out), {x}, "hflip",
                                     [apply](detail::Node<Scalar>& self) {
                                       auto& in = *self.parents[0];
                                       if (in.requires_grad) apply(self.grad, in.grad_buffer());
                                     });
}

template <typename Scalar>
Tensor<Scalar> hflip(const Tensor<Scalar>& x) {
  if (x.ndim() == 1) {
    auto r = reshape(x, {1, x.dim(0)});
    return reshape(hflip_samples(r, {true}), x.shape());
  }
  return hflip_samples(x, std::vector<bool>(static_cast<std::size_t>(x.dim(0)), true));
}

template <typename Scalar>
Tensor<Scalar> scale_samples(const Tensor<Scalar>& x, const std::vector<Scalar>& weights) {
  const Index batch = x.dim(0);
  if (static_cast<Index>(weights.size()) != batch) {
    throw std::invalid_argument("scale_samples: one weight per batch entry required");
  }
  const Index per = x.size() / batch;
  Array<Scalar> out(x.size());
  for (Index b = 0; b < batch; ++b) out.segment(b * per, per) = weights[b] * x.value().segment(b * per, per);
  return Tensor<Scalar>::make_result(
      x.shape(), std::move(out), {x}, "scale_samples",
      [weights, per](detail::Node<Scalar>& self) {
        auto& in = *self.parents[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        for (std::size_t b = 0; b < weights.size(); ++b) {
          const Index o = static_cast<Index>(b) * per;
          g.segment(o, per) += weights[b] * self.grad.segment(o, per);
        }
      });
}

template <typename Scalar>
Tensor<Scalar> linear(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias) {
  require_ndim(x, 2, "linear");
  require_ndim(weight, 2, "linear");
  const Index batch = x.dim(0), in_f = x.dim(1), out_f = weight.dim(0);
  if (weight.dim(1) != in_f || bias.size() != out_f) {
    throw std::invalid_argument("linear: incompatible shapes " + shape_string(x.shape()) +
                                " x " + shape_string(weight.shape()));
  }
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Array<Scalar> out(batch * out_f);
  {
    Eigen::Map<const RowMat> X(x.value().data(), batch, in_f);
    Eigen::Map<const RowMat> Wm(weight.value().data(), out_f, in_f);
    Eigen::Map<const Vec> bv(bias.value().data(), out_f);
    Eigen::Map<RowMat> Y(out.data(), batch, out_f);
    Y.noalias() = X * Wm.transpose();
    Y.rowwise() += bv.transpose();
  }
  return Tensor<Scalar>::make_result(
      {batch, out_f}, std::move(out), {x, weight, bias}, "linear",
      [batch, in_f, out_f](detail::Node<Scalar>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        Eigen::Map<const RowMat> G(self.grad.data(), batch, out_f);
        if (px.requires_grad) {
          Eigen::Map<const RowMat> Wm(pw.value.data(), out_f, in_f);
          Eigen::Map<RowMat> GX(px.grad_buffer().data(), batch, in_f);
          GX.noalias() += G * Wm;
        }
        if (pw.requires_grad) {
          Eigen::Map<const RowMat> X(px.value.data(), batch, in_f);
          Eigen::Map<RowMat> GW(pw.grad_buffer().data(), out_f, in_f);
          GW.noalias() += G.transpose() * X;
        }
        if (pb.requires_grad) {
          Eigen::Map<Vec> GB(pb.grad_buffer().data(), out_f);
          GB += G.colwise().sum().transpose();
        }
      });
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, Index stride, Index pad) {
  require_ndim(x, 4, "conv2d");
  require_ndim(weight, 4, "conv2d");
  const Index batch = x.dim(0);
  const ConvGeometry g = ConvGeometry::make(x.dim(1), x.dim(2), x.dim(3), weight.dim(2),
                                            stride, pad);
  const Index out_c = weight.dim(0);
  if (weight.dim(1) != g.channels || weight.dim(3) != g.kernel || bias.size() != out_c) {
    throw std::invalid_argument("conv2d: weight " + shape_string(weight.shape()) +
                                " incompatible with input " + shape_string(x.shape()));
  }
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index in_per = g.channels * g.height * g.width;
  const Index out_pix = g.out_height * g.out_width;
  const Index out_per = out_c * out_pix;
  const Shape os{batch, out_c, g.out_height, g.out_width};

  auto cols = std::make_shared<std::vector<RowMat>>(static_cast<std::size_t>(batch));
  Array<Scalar> out(batch * out_per);
  Eigen::Map<const RowMat> Wm(weight.value().data(), out_c, g.patch());
  Eigen::Map<const Vec> bv(bias.value().data(), out_c);
  for (Index b = 0; b < batch; ++b) {
    RowMat& col = (*cols)[static_cast<std::size_t>(b)];
    im2col(x.value().data() + b * in_per, g, col);
    Eigen::Map<RowMat> Y(out.data() + b * out_per, out_c, out_pix);
    Y.noalias() = Wm * col;
    Y.colwise() += bv;
  }
  const bool keep_cols = weight.requires_grad();
  if (!keep_cols) cols->clear();
  return Tensor<Scalar>::make_result(
      os, std::move(out), {x, weight, bias}, "conv2d",
      [g, batch, out_c, in_per, out_pix, out_per, cols](detail::Node<Scalar>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        Eigen::Map<const RowMat> Wm(pw.value.data(), out_c, g.patch());
        RowMat gcol;
        for (Index b = 0; b < batch; ++b) {
          Eigen::Map<const RowMat> G(self.grad.data() + b * out_per, out_c, out_pix);
          if (pw.requires_grad) {
            Eigen::Map<RowMat> GW(pw.grad_buffer().data(), out_c, g.patch());
            GW.noalias() += G * (*cols)[static_cast<std::size_t>(b)].transpose();
          }
          if (pb.requires_grad) {
            Eigen::Map<Vec> GB(pb.grad_buffer().data(), out_c);
            GB += G.rowwise().sum();
          }
          if (px.requires_grad) {
            gcol.noalias() = Wm.transpose() * G;
            col2im(gcol, g, px.grad_buffer().data() + b * in_per);
          }
        }
      });
}

template <typename Scalar>
Tensor<Scalar> conv_transpose2d(const Tensor<Scalar>& x, const Tensor<Scalar>& weight,
                                const Tensor<Scalar>& bias, Index stride, Index pad) {
  require_ndim(x, 4, "conv_transpose2d");
  require_ndim(weight, 4, "conv_transpose2d");
  const Index batch = x.dim(0), in_c = x.dim(1), in_h = x.dim(2), in_w = x.dim(3);
  const Index out_c = weight.dim(1), k = weight.dim(2);
  if (weight.dim(0) != in_c || weight.dim(3) != k || bias.size() != out_c) {
    throw std::invalid_argument("conv_transpose2d: weight " + shape_string(weight.shape()) +
                                " incompatible with input " + shape_string(x.shape()));
  }
  const Index out_h = (in_h - 1) * stride - 2 * pad + k;
  const Index out_w = (in_w - 1) * stride - 2 * pad + k;
  // Geometry of the forward convolution that this operation is the adjoint of.
  const ConvGeometry g = ConvGeometry::make(out_c, out_h, out_w, k, stride, pad);
  if (g.out_height != in_h || g.out_width != in_w) {
    throw std::invalid_argument("conv_transpose2d: inconsistent geometry");
  }
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Index in_pix = in_h * in_w;
  const Index in_per = in_c * in_pix;
  const Index out_pix = out_h * out_w;
  const Index out_per = out_c * out_pix;
  const Shape os{batch, out_c, out_h, out_w};

  Array<Scalar> out(batch * out_per);
  Eigen::Map<const RowMat> Wm(weight.value().data(), in_c, g.patch());
  Eigen::Map<const Vec> bv(bias.value().data(), out_c);
  RowMat col;
  for (Index b = 0; b < batch; ++b) {
    Eigen::Map<const RowMat> X(x.value().data() + b * in_per, in_c, in_pix);
    col.noalias() = Wm.transpose() * X;
    Eigen::Map<RowMat> Y(out.data() + b * out_per, out_c, out_pix);
    Y.colwise() = bv;
    col2im(col, g, out.data() + b * out_per);
  }
  return Tensor<Scalar>::make_result(
      os, std::move(out), {x, weight, bias}, "conv_transpose2d",
      [g, batch, in_c, in_pix, in_per, out_c, out_pix, out_per](detail::Node<Scalar>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        auto& pb = *self.parents[2];
        Eigen::Map<const RowMat> Wm(pw.value.data(), in_c, g.patch());
        RowMat gcol;
        for (Index b = 0; b < batch; ++b) {
          Eigen::Map<const RowMat> G(self.grad.data() + b * out_per, out_c, out_pix);
          if (pb.requires_grad) {
            Eigen::Map<Vec> GB(pb.grad_buffer().data(), out_c);
            GB += G.rowwise().sum();
          }
          if (!px.requires_grad && !pw.requires_grad) continue;
          im2col(self.grad.data() + b * out_per, g, gcol);
          if (pw.requires_grad) {
            Eigen::Map<const RowMat> X(px.value.data() + b * in_per, in_c, in_pix);
            Eigen::Map<RowMat> GW(pw.grad_buffer().data(), in_c, g.patch());
            GW.noalias() += X * gcol.transpose();
          }
          if (px.requires_grad) {
            Eigen::Map<RowMat> GX(px.grad_buffer().data() + b * in_per, in_c, in_pix);
            GX.noalias() += Wm * gcol;
          }
        }
      });
}

#define PHOTOGEO_INSTANTIATE_OPS(S)                                                      \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> div(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> affine(const Tensor<S>&, S, S);                                      \
  template Tensor<S> neg(const Tensor<S>&);                                               \
  template Tensor<S> abs(const Tensor<S>&);                                               \
  template Tensor<S> square(const Tensor<S>&);                                            \
  template Tensor<S> sqrt(const Tensor<S>&);                                              \
  template Tensor<S> exp(const Tensor<S>&);                                               \
  template Tensor<S> log(const Tensor<S>&);                                               \
  template Tensor<S> tanh(const Tensor<S>&);                                              \
  template Tensor<S> sigmoid(const Tensor<S>&);                                           \
  template Tensor<S> relu(const Tensor<S>&);                                              \
  template Tensor<S> leaky_relu(const Tensor<S>&, S);                                     \
  template Tensor<S> sum(const Tensor<S>&);                                               \
  template Tensor<S> mean(const Tensor<S>&);                                              \
  template Tensor<S> batch_mean(const Tensor<S>&);                                        \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                    \
  template Tensor<S> columns(const Tensor<S>&, Index, Index);                             \
  template Tensor<S> concat_columns(const std::vector<Tensor<S>>&);                       \
  template Tensor<S> concat_channels(const std::vector<Tensor<S>>&);                      \
  template Tensor<S> crop_center(const Tensor<S>&, Index, Index);                         \
  template Tensor<S> hflip(const Tensor<S>&);                                             \
  template Tensor<S> hflip_samples(const Tensor<S>&, const std::vector<bool>&);           \
  template Tensor<S> scale_samples(const Tensor<S>&, const std::vector<S>&);              \
  template Tensor<S> linear(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);        \
  template Tensor<S> conv2d(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, Index,  \
                            Index);                                                       \
  template Tensor<S> conv_transpose2d(const Tensor<S>&, const Tensor<S>&,                 \
                                      const Tensor<S>&, Index, Index);

PHOTOGEO_INSTANTIATE_OPS(float)
PHOTOGEO_INSTANTIATE_OPS(double)

}  // namespace photogeo
