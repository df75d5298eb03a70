#include "photogeo/gradcheck.hpp"

#include "photogeo/camera.hpp"
#include "photogeo/losses.hpp"
#include "photogeo/ops.hpp"
#include "photogeo/photometric.hpp"
#include "photogeo/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace photogeo {

namespace {

using Rng = std::mt19937_64;
using T = Tensor<double>;

constexpr double kStep = 3e-6;

Array<double> uniform(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Array<double> a(n);
  for (Index i = 0; i < n; ++i) a[i] = u(rng);
  return a;
}

T random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  return T::from_array(shape, uniform(rng, shape_size(shape), lo, hi));
}

// Sum of a few low-frequency waves around 0.5, within [0.42, 0.58].
T smooth_depth(Rng& rng, Index B, Index n) {
  std::uniform_real_distribution<double> u(-1, 1);
  Array<double> d(B * n * n);
  for (Index b = 0; b < B; ++b) {
    double fx[3], fy[3], ph[3], amp[3];
    for (int k = 0; k < 3; ++k) {
      fx[k] = 0.6 * u(rng);
      fy[k] = 0.6 * u(rng);
      ph[k] = 3 * u(rng);
      amp[k] = 0.025 * u(rng);
    }
    for (Index y = 0; y < n; ++y) {
      for (Index x = 0; x < n; ++x) {
        double v = 0.5;
        for (int k = 0; k < 3; ++k) v += amp[k] * std::cos(fx[k] * double(x) + fy[k] * double(y) + ph[k]);
        d[(b * n + y) * n + x] = v;
      }
    }
  }
  return T::from_array({B, 1, n, n}, std::move(d));
}

T small_pose(Rng& rng, Index B) {
  Array<double> w(6 * B);
  for (Index b = 0; b < B; ++b) {
    w.segment(6 * b, 3) = uniform(rng, 3, -0.08, 0.08);
    w.segment(6 * b + 3, 3) = uniform(rng, 3, -0.02, 0.02);
  }
  return T::from_array({B, 6}, std::move(w));
}

Intrinsics<double> grid(Index n) { return intrinsics_from_fov<double>(n, n, 25.0); }

T weighted_sum(const T& y, const Array<double>& w) {
  return sum(mul(y, T::from_array(y.shape(), w)));
}

// Random projection weights restricted to pixels whose rasterized depth is a
// smooth function of the inputs: at least 2 px from any change of coverage
// and clear of the supplying triangle's edges.
Array<double> smooth_pixel_weights(Rng& rng, const RenderedDepth<double>& rd, Index B, Index n) {
  Array<double> w = uniform(rng, B * n * n, -1, 1);
  for (Index b = 0; b < B; ++b) {
    for (Index y = 0; y < n; ++y) {
      for (Index x = 0; x < n; ++x) {
        const Index i = (b * n + y) * n + x;
        bool keep = rd.observed[static_cast<std::size_t>(i)] != 0;
        for (Index dy = -2; keep && dy <= 2; ++dy) {
          for (Index dx = -2; keep && dx <= 2; ++dx) {
            const Index yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= n || xx < 0 || xx >= n) continue;
            keep = rd.coverage[static_cast<std::size_t>((b * n + yy) * n + xx)] ==
                   rd.coverage[static_cast<std::size_t>(i)];
          }
        }
        if (keep) {
          const auto s = rd.source[static_cast<std::size_t>(i)];
          keep = rd.edge_margin[static_cast<std::size_t>(b * n * n + s)] > 1e-3;
        }
        if (!keep) w[i] = 0;
      }
    }
  }
  return w;
}

struct Entry {
  const char* name;
  double tol;
  std::function<GradCheckReport(Rng&, Index, double)> probe;
};

GradCheckReport check(const ScalarFn& f, const T& x, double tol) { return grad_check(f, x, kStep, tol); }
// For maps linear in each coordinate (piecewise, with probes kept clear of
// kinks) the central difference is exact at any step; a large step keeps
// round-off away from tiny gradient entries.
constexpr double kLinearStep = 1e-2;
// Normalized tangent cross products have large third derivatives; a smaller
// step and a wide-angle probe grid (longer tangents) keep the truncation error
// below tolerance.
constexpr double kCurvedStep = 1e-6;
GradCheckReport check_linear(const ScalarFn& f, const T& x, double tol) {
  return grad_check(f, x, kLinearStep, tol);
}

// Shading inputs with every <l, n> at least 0.05 away from the clamp.
struct ShadeInputs {
  T albedo, normals, light, ambient, diffuse;
};

ShadeInputs shade_inputs(Rng& rng, Index n) {
  ShadeInputs s;
  const Index B = 2, N = n * n;
  s.albedo = random_tensor(rng, {B, 3, n, n}, 0.1, 0.9);
  Array<double> l(3 * B);
  for (Index b = 0; b < B; ++b) {
    const auto a = uniform(rng, 2, -40, 40);
    l.segment(3 * b, 3) = light_from_angles(a[0], a[1]).array();
  }
  s.light = T::from_array({B, 3}, l);
  Array<double> nv(B * 3 * N);
  std::normal_distribution<double> g(0, 0.6);
  for (Index b = 0; b < B; ++b) {
    const Vector3<double> lb = l.segment(3 * b, 3).matrix();
    for (Index i = 0; i < N; ++i) {
      Vector3<double> v;
      do {
        v = Vector3<double>(g(rng), g(rng), -1).normalized();
      } while (std::abs(v.dot(lb)) < 0.05);
      for (int c = 0; c < 3; ++c) nv[(b * 3 + c) * N + i] = v[c];
    }
  }
  s.normals = T::from_array({B, 3, n, n}, nv);
  s.ambient = random_tensor(rng, {B, 1}, 0.1, 0.5);
  s.diffuse = random_tensor(rng, {B, 1}, 0.3, 0.8);
  return s;
}

std::vector<Entry> registry() {
  std::vector<Entry> e;
  auto shade_entry = [&e](const char* name, int which) {
    e.push_back({name, 1e-4, [which](Rng& rng, Index n, double tol) {
                   auto s = shade_inputs(rng, n);
                   T* slots[] = {&s.albedo, &s.normals, &s.light, &s.ambient, &s.diffuse};
                   const RandomProjection proj(s.albedo.shape(), rng());
                   const T x = *slots[which];
                   return check_linear(
                       [s, which, proj](const T& v) mutable {
                         T in[] = {s.albedo, s.normals, s.light, s.ambient, s.diffuse};
                         in[which] = v;
                         return proj(shade(in[0], in[1], in[2], in[3], in[4]));
                       },
                       x, tol);
                 }});
  };
  shade_entry("shade/albedo", 0);
  shade_entry("shade/normals", 1);
  shade_entry("shade/light", 2);
  shade_entry("shade/ambient", 3);
  shade_entry("shade/diffuse", 4);

  e.push_back({"light_direction", 1e-4, [](Rng& rng, Index, double tol) {
                 const RandomProjection proj({3, 3}, rng());
                 return check([proj](const T& a) { return proj(light_direction(a)); },
                              random_tensor(rng, {3, 2}, -60, 60), tol);
               }});
  e.push_back({"normals_from_depth", 1e-4, [](Rng& rng, Index n, double tol) {
                 const auto K = intrinsics_from_fov<double>(n, n, 90.0);
                 const RandomProjection proj({2, 3, n, n}, rng());
                 return grad_check([K, proj](const T& d) { return proj(normals_from_depth(d, K).normals); },
                                   smooth_depth(rng, 2, n), kCurvedStep, tol);
               }});

  e.push_back({"pivot_pose", 1e-4, [](Rng& rng, Index, double tol) {
                 const RandomProjection proj({3, 6}, rng());
                 return check([proj](const T& w) { return proj(pivot_pose(w, 0.5)); },
                              random_tensor(rng, {3, 6}, -0.5, 0.5), tol);
               }});

  auto warp_entry = [&e](const char* name, bool inverse, bool wrt_pose) {
    e.push_back({name, 1e-4, [=](Rng& rng, Index n, double tol) {
                   const auto K = grid(n);
                   const T depth = smooth_depth(rng, 2, n), pose = small_pose(rng, 2);
                   const RandomProjection proj({2, 2, n, n}, rng());
                   auto field = [=](const T& d, const T& w) {
                     return inverse ? inverse_warp_field(d, w, K).coords : forward_warp_field(d, w, K).coords;
                   };
                   if (wrt_pose) return check([=](const T& w) { return proj(field(depth, w)); }, pose, tol);
                   return check([=](const T& d) { return proj(field(d, pose)); }, depth, tol);
                 }});
  };
  warp_entry("forward_warp_field/depth", false, false);
  warp_entry("forward_warp_field/pose", false, true);
  warp_entry("inverse_warp_field/depth", true, false);
  warp_entry("inverse_warp_field/pose", true, true);

  auto raster_entry = [&e](const char* name, bool wrt_pose) {
    e.push_back({name, wrt_pose ? 1e-3 : 1e-4, [=](Rng& rng, Index n, double tol) {
                   const auto K = grid(n);
                   const T depth = smooth_depth(rng, 2, n), pose = small_pose(rng, 2);
                   const auto w = smooth_pixel_weights(rng, rasterize_depth(depth, pose, K), 2, n);
                   if (wrt_pose) {
                     return check([=](const T& p) { return weighted_sum(rasterize_depth(depth, p, K).depth, w); },
                                  pose, tol);
                   }
                   return check([=](const T& d) { return weighted_sum(rasterize_depth(d, pose, K).depth, w); },
                                depth, tol);
                 }});
  };
  raster_entry("rasterize_depth/depth", false);
  raster_entry("rasterize_depth/pose", true);

  auto bilinear_entry = [&e](const char* name, bool wrt_coords) {
    e.push_back({name, 1e-4, [=](Rng& rng, Index n, double tol) {
                   const T image = random_tensor(rng, {2, 3, n, n}, 0, 1);
                   // Whole-pixel part plus a fraction clear of the kinks at integers.
                   Array<double> c = uniform(rng, 2 * 2 * n * n, 0, double(n - 2)).floor() +
                                     uniform(rng, 2 * 2 * n * n, 0.05, 0.95);
                   WarpField<double> field{T::from_array({2, 2, n, n}, c), std::vector<std::uint8_t>(2 * n * n, 1)};
                   const RandomProjection proj({2, 3, n, n}, rng());
                   if (wrt_coords) {
                     const auto valid = field.valid;
                     return check(
                         [=](const T& xy) { return proj(bilinear_sample(image, WarpField<double>{xy, valid}).image); },
                         field.coords, tol);
                   }
                   return check_linear([=](const T& im) { return proj(bilinear_sample(im, field).image); }, image, tol);
                 }});
  };
  bilinear_entry("bilinear_sample/image", false);
  bilinear_entry("bilinear_sample/coords", true);

  auto reproject_entry = [&e](const char* name, int which) {
    e.push_back({name, which == 2 ? 1e-3 : 1e-4, [=](Rng& rng, Index n, double tol) {
                   const auto K = grid(n);
                   const T canonical = random_tensor(rng, {2, 3, n, n}, 0, 1);
                   const T depth = smooth_depth(rng, 2, n), pose = small_pose(rng, 2);
                   const auto rp = reproject(canonical, depth, pose, K, n, n);
                   const auto pix = smooth_pixel_weights(rng, rp.rendered, 2, n);
                   Array<double> w = uniform(rng, 2 * 3 * n * n, -1, 1);
                   const auto& xy = rp.warp.coords.value();
                   for (Index b = 0; b < 2; ++b) {
                     for (Index i = 0; i < n * n; ++i) {
                       const double fu = xy[(b * 2) * n * n + i], fv = xy[(b * 2 + 1) * n * n + i];
                       const bool near_kink = std::abs(fu - std::round(fu)) < 1e-3 || std::abs(fv - std::round(fv)) < 1e-3;
                       if (pix[b * n * n + i] == 0 || near_kink) {
                         for (Index c = 0; c < 3; ++c) w[(b * 3 + c) * n * n + i] = 0;
                       }
                     }
                   }
                   auto f = [=](const T& im, const T& d, const T& p) {
                     return weighted_sum(reproject(im, d, p, K, n, n).image, w);
                   };
                   if (which == 0) return check_linear([=](const T& v) { return f(v, depth, pose); }, canonical, tol);
                   if (which == 1) return check([=](const T& v) { return f(canonical, v, pose); }, depth, tol);
                   return check([=](const T& v) { return f(canonical, depth, v); }, pose, tol);
                 }});
  };
  reproject_entry("reproject/canonical", 0);
  reproject_entry("reproject/depth", 1);
  reproject_entry("reproject/pose", 2);

  e.push_back({"l1_loss", 1e-4, [](Rng& rng, Index n, double tol) {
                 const T target = random_tensor(rng, {2, 3, n, n}, 0, 1);
                 // Offsets of at least 0.01 keep every residual off the kink.
                 Array<double> off = uniform(rng, target.size(), 0.01, 0.2);
                 for (Index i = 0; i < off.size(); ++i) off[i] *= (rng() & 1) ? 1 : -1;
                 return check([target](const T& r) { return l1_loss(r, target); },
                              T::from_array(target.shape(), target.value() + off), tol);
               }});
  e.push_back({"perceptual_loss", 1e-4, [](Rng& rng, Index n, double tol) {
                 const RandomConvEncoder<double> enc(rng(), 3, {4, 8});
                 const T target = random_tensor(rng, {2, 3, n, n}, 0, 1);
                 // Redraw inputs with any LeakyReLU pre-activation within reach of the step.
                 T rec;
                 do {
                   rec = random_tensor(rng, {2, 3, n, n}, 0, 1);
                 } while (std::ranges::any_of(enc.features(rec), [](const T& f) {
                   return (f.value().abs() < 1e-5).any();
                 }));
                 return check([=](const T& r) { return perceptual_loss(r, target, enc); }, rec, tol);
               }});
  e.push_back({"reg_viewpoint", 1e-4, [](Rng& rng, Index, double tol) {
                 return check([](const T& p) { return reg_viewpoint(p); }, random_tensor(rng, {4, 6}, -0.5, 0.5), tol);
               }});
  e.push_back({"reg_depth_pair", 1e-4, [](Rng& rng, Index n, double tol) {
                 const T other = smooth_depth(rng, 1, n);
                 return check([other](const T& d) { return reg_depth_pair(d, other); }, smooth_depth(rng, 1, n), tol);
               }});
  e.push_back({"depth_pair_term", 1e-4, [](Rng& rng, Index n, double tol) {
                 return check([](const T& d) { return depth_pair_term(d); }, smooth_depth(rng, 4, n), tol);
               }});
  auto objective_entry = [&e](const char* name, int which) {
    e.push_back({name, 1e-4, [=](Rng& rng, Index n, double tol) {
                   const RandomConvEncoder<double> enc(rng(), 3, {4, 8});
                   const T target = random_tensor(rng, {2, 3, n, n}, 0, 1);
                   Array<double> off = uniform(rng, target.size(), 0.01, 0.2);
                   for (Index i = 0; i < off.size(); ++i) off[i] *= (rng() & 1) ? 1 : -1;
                   const T rec = T::from_array(target.shape(), target.value() + off);
                   const T depth = smooth_depth(rng, 2, n), pose = random_tensor(rng, {2, 6}, -0.3, 0.3);
                   // Larger weights than the defaults so every term shows in the sum.
                   const LossWeights lw{1.0, 0.5, 2.0, 1.0};
                   auto f = [=](const T& r, const T& d, const T& p) { return objective(r, target, d, p, lw, &enc).total; };
                   if (which == 0) return check([=](const T& v) { return f(v, depth, pose); }, rec, tol);
                   if (which == 1) return check([=](const T& v) { return f(rec, v, pose); }, depth, tol);
                   return check([=](const T& v) { return f(rec, depth, v); }, pose, tol);
                 }});
  };
  objective_entry("objective/reconstruction", 0);
  objective_entry("objective/depth", 1);
  objective_entry("objective/pose", 2);

  e.push_back({"conv2d/input+weight", 1e-4, [](Rng& rng, Index n, double tol) {
                 const T w = random_tensor(rng, {4, 3, 3, 3}, -0.5, 0.5), bias = random_tensor(rng, {4}, -0.1, 0.1);
                 const T x = random_tensor(rng, {2, 3, n, n}, -1, 1);
                 const RandomProjection proj({2, 4, n / 2, n / 2}, rng());
                 auto a = check_linear([=](const T& v) { return proj(conv2d(v, w, bias, 2, 1)); }, x, tol);
                 auto b = check_linear([=](const T& v) { return proj(conv2d(x, v, bias, 2, 1)); }, w, tol);
                 return a.max_rel_err >= b.max_rel_err ? a : b;
               }});
  e.push_back({"conv_transpose2d/input+weight", 1e-4, [](Rng& rng, Index n, double tol) {
                 const T w = random_tensor(rng, {3, 4, 4, 4}, -0.5, 0.5), bias = random_tensor(rng, {4}, -0.1, 0.1);
                 const T x = random_tensor(rng, {2, 3, n / 2, n / 2}, -1, 1);
                 const RandomProjection proj({2, 4, n, n}, rng());
                 auto a = check_linear([=](const T& v) { return proj(conv_transpose2d(v, w, bias, 2, 1)); }, x, tol);
                 auto b = check_linear([=](const T& v) { return proj(conv_transpose2d(x, v, bias, 2, 1)); }, w, tol);
                 return a.max_rel_err >= b.max_rel_err ? a : b;
               }});
  e.push_back({"linear", 1e-4, [](Rng& rng, Index, double tol) {
                 const T w = random_tensor(rng, {3, 5}, -1, 1), bias = random_tensor(rng, {3}, -1, 1);
                 const RandomProjection proj({2, 3}, rng());
                 return check_linear([=](const T& v) { return proj(linear(v, w, bias)); }, random_tensor(rng, {2, 5}, -1, 1), tol);
               }});
  e.push_back({"tanh+sigmoid", 1e-4, [](Rng& rng, Index n, double tol) {
                 const RandomProjection proj({2, n}, rng());
                 return check([=](const T& v) { return proj(add(tanh(v), sigmoid(v))); }, random_tensor(rng, {2, n}, -3, 3), tol);
               }});
  e.push_back({"hflip+crop+concat", 1e-4, [](Rng& rng, Index n, double tol) {
                 const RandomProjection proj({2, 6, n - 2, n - 2}, rng());
                 return check(
                     [=](const T& v) {
                       return proj(crop_center(concat_channels<double>({hflip_samples(v, {true, false}), v}), n - 2, n - 2));
                     },
                     random_tensor(rng, {2, 3, n, n}, -1, 1), tol);
               }});
  return e;
}

}  // namespace

std::vector<PrimitiveCheck> run_primitive_checks(Index size, int probes, std::uint64_t seed) {
  if (size < 4 || size % 2) throw std::invalid_argument("gradient checks need an even size of at least 4");
  std::vector<PrimitiveCheck> out;
  Rng rng(seed);
  for (const auto& entry : registry()) {
    PrimitiveCheck c;
    c.name = entry.name;
    c.tolerance = entry.tol;
    c.pass = true;
    for (int p = 0; p < probes; ++p) {
      const auto r = entry.probe(rng, size, entry.tol);
      ++c.probes;
      if (p == 0 || !r.pass || r.max_rel_err > c.worst.max_rel_err) {
        if (c.pass || !r.pass) c.worst = r;
      }
      c.pass = c.pass && r.pass;
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string format_check_table(const std::vector<PrimitiveCheck>& checks) {
  std::ostringstream os;
  os << std::left << std::setw(32) << "primitive" << std::right << std::setw(7) << "probes" << std::setw(10)
     << "tol" << std::setw(14) << "max_rel_err" << std::setw(14) << "max_abs_err" << "  result\n";
  for (const auto& c : checks) {
    os << std::left << std::setw(32) << c.name << std::right << std::setw(7) << c.probes << std::setw(10)
       << std::setprecision(1) << std::scientific << c.tolerance << std::setw(14) << std::setprecision(3)
       << c.worst.max_rel_err << std::setw(14) << c.worst.max_abs_err << "  " << (c.pass ? "PASS" : "FAIL");
    if (!c.worst.failure.empty()) os << " (" << c.worst.failure << ")";
    os << '\n' << std::defaultfloat;
  }
  return os.str();
}

}  // namespace photogeo
