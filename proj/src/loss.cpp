#include "eigfilter/loss.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eigfilter {

double central_difference_step(double scale) {
  static const double kCbrtEps = std::cbrt(std::numeric_limits<double>::epsilon());
  return kCbrtEps * (1.0 + std::abs(scale));
}

void Loss::require_dim(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    std::ostringstream msg;
    msg << id() << ": expected a " << dim() << "-vector, got " << x.size();
    throw PreconditionError(msg.str());
  }
}

Vector Loss::hvp(const Vector& x, const Vector& v) const {
  require_dim(x);
  const double vnorm = v.norm();
  if (vnorm == 0.0) return Vector::Zero(x.size());
  const Vector u = v / vnorm;
  const double h = central_difference_step(x.norm());
  const Vector forward = gradient(x + h * u);
  const Vector backward = gradient(x - h * u);
  return (forward - backward) * (vnorm / (2.0 * h));
}

Matrix Loss::hessian(const Vector& x) const {
  require_dim(x);
  if (!has_dense_hessian()) {
    std::ostringstream msg;
    msg << id() << ": dense Hessian refused for dim " << dim() << " (cap " << kDenseHessianCap << ")";
    throw PreconditionError(msg.str());
  }
  const auto m = static_cast<Eigen::Index>(dim());
  Matrix h(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    h.col(j) = hvp(x, Vector::Unit(m, j));
  }
  return 0.5 * (h + h.transpose());
}

DerivativeReport check_derivatives(const Loss& loss, const Vector& x, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("check_derivatives: tol must be positive");
  const auto m = x.size();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(x[i])) {
      throw ProbeFailureError("check_derivatives: non-finite probe coordinate " + std::to_string(i),
                              static_cast<std::size_t>(i));
    }
  }
  if (!std::isfinite(loss.value(x))) {
    throw ProbeFailureError("check_derivatives: non-finite loss value at probe");
  }
  const Vector grad = loss.gradient(x);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(grad[i])) {
      throw ProbeFailureError("check_derivatives: non-finite gradient at coordinate " + std::to_string(i),
                              static_cast<std::size_t>(i));
    }
  }

  DerivativeReport report;
  Vector fd_grad(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double h = central_difference_step(x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = loss.value(xp);
    const double fm = loss.value(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw ProbeFailureError("check_derivatives: non-finite value probing coordinate " + std::to_string(i),
                              static_cast<std::size_t>(i));
    }
    fd_grad[i] = (fp - fm) / ((xp[i] - xm[i]));
  }
  report.grad_max_rel_error = (fd_grad - grad).cwiseAbs().maxCoeff() / (1.0 + grad.norm());

  // hvp against differences of the gradient along each axis.
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector e = Vector::Unit(m, i);
    const Vector hv = loss.hvp(x, e);
    const double h = central_difference_step(x[i]);
    Vector xp = x;
    Vector xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Vector fd = (loss.gradient(xp) - loss.gradient(xm)) / (xp[i] - xm[i]);
    if (!fd.allFinite() || !hv.allFinite()) {
      throw ProbeFailureError("check_derivatives: non-finite hvp probing coordinate " + std::to_string(i),
                              static_cast<std::size_t>(i));
    }
    const double err = (fd - hv).cwiseAbs().maxCoeff() / (1.0 + hv.norm());
    report.hvp_max_rel_error = std::max(report.hvp_max_rel_error, err);
  }
  report.passed = report.grad_max_rel_error <= tol && report.hvp_max_rel_error <= tol;
  return report;
}

}  // namespace eigfilter
