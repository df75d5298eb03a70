#pragma once

#include "photogeo/tensor.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace photogeo {

struct GradCheckReport {
  double max_rel_err = 0;
  double max_abs_err = 0;
  Index worst = -1;          // coordinate with the largest relative error
  Index checked = 0;
  bool pass = false;
  std::string failure;       // set when f was not finite at a probe
};

using ScalarFn = std::function<Tensor<double>(const Tensor<double>&)>;

/// Compares the reverse-mode gradient of the scalar map f at x against
/// central differences (f(x + h e_i) - f(x - h e_i)) / 2h. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). `coords` restricts the check to a subset
/// of coordinates (all when empty).
GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x, double h = 1e-5,
                           double tol = 1e-4, const std::vector<Index>& coords = {});

/// sum(y * r) for a fixed random r; turns a tensor-valued map into a scalar
/// one while exercising every output entry.
class RandomProjection {
 public:
  RandomProjection(const Shape& shape, std::uint64_t seed);
  Tensor<double> operator()(const Tensor<double>& y) const;

 private:
  Tensor<double> weights_;
};

/// Outcome of one registered primitive over all of its random probes.
struct PrimitiveCheck {
  std::string name;
  double tolerance = 1e-4;
  int probes = 0;
  GradCheckReport worst;  // probe with the largest relative error
  bool pass = false;
};

/// Runs every registered differentiable primitive through grad_check in
/// double precision on `probes` random inputs with size x size spatial
/// extent. Rasterizer probes ignore pixels within 2 px of a coverage
/// boundary and carry the looser 1e-3 tolerance on pose gradients.
std::vector<PrimitiveCheck> run_primitive_checks(Index size = 8, int probes = 20,
                                                 std::uint64_t seed = 1);

/// Fixed-width pass/fail table, one row per primitive.
std::string format_check_table(const std::vector<PrimitiveCheck>& checks);

}  // namespace photogeo
