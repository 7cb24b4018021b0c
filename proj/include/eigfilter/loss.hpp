#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "eigfilter/types.hpp"

namespace eigfilter {

/// Differentiable objective over R^m.
///
/// Implementations are immutable after construction, so a single instance
/// may be evaluated concurrently from several workers.
class Loss {
 public:
  virtual ~Loss() = default;

  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual double value(const Vector& x) const = 0;
  [[nodiscard]] virtual Vector gradient(const Vector& x) const = 0;

  /// Hessian-vector product. The default is a central difference of the
  /// gradient along v with step cbrt(eps) * (1 + |x|).
  [[nodiscard]] virtual Vector hvp(const Vector& x, const Vector& v) const;

  /// Dense symmetric Hessian. The default assembles it column by column
  /// from hvp and symmetrizes. Refuses when dim() exceeds the dense cap.
  [[nodiscard]] virtual Matrix hessian(const Vector& x) const;

  [[nodiscard]] bool has_dense_hessian() const { return dim() <= kDenseHessianCap; }

 protected:
  void require_dim(const Vector& x) const;
};

using LossPtr = std::shared_ptr<const Loss>;

struct QuadraticSpec {
  std::vector<double> eigenvalues;
  std::uint64_t rotation_seed = 0;
  std::vector<double> center;  // empty means the origin
};

struct BumpLossSpec {
  std::size_t dim = 2;
};

struct PiecewiseCubicSpec {
  double K = 1.0;
};

/// f(x) = 1/2 (x - c)^T Q^T diag(lambda) Q (x - c), Q orthogonal from the seed.
[[nodiscard]] LossPtr make_quadratic(const QuadraticSpec& spec);

/// f(x) = h(|x|) with h(t) = (t^2 - 1)^2 for t <= 2, h(t) = t^2 for t >= 3
/// and a quintic Hermite blend in between.
[[nodiscard]] LossPtr make_bump_loss(const BumpLossSpec& spec);

/// 1-D: f = 0 for x <= 1, f = -(K/3)(x - 1)^3 for x > 1.
[[nodiscard]] LossPtr make_piecewise_cubic(const PiecewiseCubicSpec& spec);

/// 1-D: f = -x^2 / rho.
[[nodiscard]] LossPtr make_concave_quadratic(double rho);

/// Radial profile of the bump loss with its first two derivatives.
struct RadialProfile {
  double value;
  double first;
  double second;
};
[[nodiscard]] RadialProfile bump_profile(double t);

// ---------------------------------------------------------------------------
// Derivative checks

struct DerivativeReport {
  double grad_max_rel_error = 0.0;
  double hvp_max_rel_error = 0.0;
  bool passed = false;
};

/// Compares gradient against central differences of value, and hvp against
/// central differences of gradient, at x. Errors are relative to (1 + |ref|).
[[nodiscard]] DerivativeReport check_derivatives(const Loss& loss, const Vector& x, double tol);

// ---------------------------------------------------------------------------
// Catalog addressed by string id

using ParamValue = std::variant<double, std::vector<double>, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

/// Known ids: quadratic, bump, piecewise_cubic, concave_quadratic, mlp.
/// Unknown ids or keys raise InvalidSpecError.
[[nodiscard]] LossPtr make_loss(const std::string& id, const ParamMap& params);

[[nodiscard]] std::vector<std::string> catalog_ids();

}  // namespace eigfilter
