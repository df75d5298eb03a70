#include "photogeo/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace photogeo {

template <typename Scalar>
bool adam_step(AdamState<Scalar>& state, Tensor<Scalar>& param, const Array<Scalar>& grad) {
  if (grad.size() != param.size()) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (state.step < 0) throw std::invalid_argument("adam_step: negative step count");
  if (!grad.allFinite()) return false;
  if (state.m.size() == 0) {
    state.m = Array<Scalar>::Zero(param.size());
    state.v = Array<Scalar>::Zero(param.size());
  }
  const Scalar b1 = Scalar(state.beta1), b2 = Scalar(state.beta2);
  state.step += 1;
  state.m = b1 * state.m + (1 - b1) * grad;
  state.v = b2 * state.v + (1 - b2) * grad.square();
  const auto t = static_cast<double>(state.step);
  const Scalar c1 = Scalar(1 - std::pow(state.beta1, t));
  const Scalar c2 = Scalar(1 - std::pow(state.beta2, t));
  param.mutable_value() -=
      Scalar(state.lr) * (state.m / c1) / ((state.v / c2).sqrt() + Scalar(state.eps));
  return true;
}

template <typename Scalar>
Adam<Scalar>::Adam(std::vector<Tensor<Scalar>> params, double lr, double beta1, double beta2,
                   double eps)
    : params_(std::move(params)) {
  states_.resize(params_.size());
  for (auto& s : states_) {
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
  }
}

template <typename Scalar>
bool Adam<Scalar>::step() {
  for (const auto& p : params_)
    if (p.has_grad() && !p.grad().allFinite()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p.has_grad()) {
      adam_step(states_[i], p, p.grad());
    } else {
      adam_step(states_[i], p, Array<Scalar>(Array<Scalar>::Zero(p.size())));
    }
  }
  return true;
}

template <typename Scalar>
void Adam<Scalar>::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

template bool adam_step(AdamState<float>&, Tensor<float>&, const Array<float>&);
template bool adam_step(AdamState<double>&, Tensor<double>&, const Array<double>&);
template class Adam<float>;
template class Adam<double>;

}  // namespace photogeo
