#pragma once

#include "photogeo/tensor.hpp"

#include <cstdint>
#include <vector>

namespace photogeo {

template <typename Scalar>
struct AdamState {
  std::int64_t step = 0;
  Array<Scalar> m;
  Array<Scalar> v;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `param` in place. Returns false and
/// leaves both param and state untouched when the gradient has a non-finite
/// entry.
template <typename Scalar>
bool adam_step(AdamState<Scalar>& state, Tensor<Scalar>& param, const Array<Scalar>& grad);

/// Adam over a fixed parameter list. Parameters that received no gradient
/// are stepped with a zero gradient.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Tensor<Scalar>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  /// Updates every parameter, or none if any gradient is non-finite.
  bool step();
  void zero_grad();

  const std::vector<Tensor<Scalar>>& params() const { return params_; }
  const std::vector<AdamState<Scalar>>& states() const { return states_; }
  std::vector<AdamState<Scalar>>& states() { return states_; }

 private:
  std::vector<Tensor<Scalar>> params_;
  std::vector<AdamState<Scalar>> states_;
};

}  // namespace photogeo
