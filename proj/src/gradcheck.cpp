#include "photogeo/gradcheck.hpp"

#include "photogeo/ops.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace photogeo {

namespace {

constexpr double kAbsFloor = 1e-8;

double evaluate(const ScalarFn& f, const Array<double>& x, const Shape& shape) {
  const auto y = f(Tensor<double>::from_array(shape, x));
  if (y.size() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
  return y.value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const Tensor<double>& x, double h, double tol,
                           const std::vector<Index>& coords) {
  GradCheckReport report;
  auto leaf = Tensor<double>::from_array(x.shape(), x.value(), true);
  const auto y = f(leaf);
  if (y.size() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
  if (!std::isfinite(y.value()[0])) {
    report.failure = "f is not finite at x";
    return report;
  }
  backward(y);
  const Array<double> analytic = leaf.has_grad() ? leaf.grad() : Array<double>::Zero(x.size());

  std::vector<Index> probe = coords;
  if (probe.empty()) {
    probe.resize(static_cast<std::size_t>(x.size()));
    std::iota(probe.begin(), probe.end(), Index(0));
  }
  Array<double> xp = x.value();
  for (const Index i : probe) {
    const double x0 = xp[i];
    xp[i] = x0 + h;
    const double fp = evaluate(f, xp, x.shape());
    xp[i] = x0 - h;
    const double fm = evaluate(f, xp, x.shape());
    xp[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      std::ostringstream os;
      os << "f is not finite when perturbing coordinate " << i;
      report.failure = os.str();
      report.worst = i;
      return report;
    }
    const double numeric = (fp - fm) / (2 * h);
    const double abs_err = std::abs(analytic[i] - numeric);
    const double rel = abs_err / std::max({std::abs(analytic[i]), std::abs(numeric), kAbsFloor});
    report.max_abs_err = std::max(report.max_abs_err, abs_err);
    if (rel > report.max_rel_err || report.worst < 0) {
      report.max_rel_err = rel;
      report.worst = i;
    }
    ++report.checked;
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

RandomProjection::RandomProjection(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Array<double> w(shape_size(shape));
  for (Index i = 0; i < w.size(); ++i) w[i] = u(rng);
  weights_ = Tensor<double>::from_array(shape, std::move(w));
}

Tensor<double> RandomProjection::operator()(const Tensor<double>& y) const {
  return sum(mul(y, weights_));
}

}  // namespace photogeo
