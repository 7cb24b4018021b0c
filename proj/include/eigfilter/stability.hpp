#pragma once

#include <complex>
#include <string>
#include <vector>

#include "eigfilter/optimizer.hpp"

namespace eigfilter {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
};

/// Composed curvature mu(lambda): lambda for GD/HB/NAG, lambda(1 + rho lambda)
/// for USAM, lambda(1 + rho lambda)^2 for USAM2, lambda(1 + rho lambda^2) for HSAM.
[[nodiscard]] double filter_value(OptimizerKind kind, double rho, double lambda);

/// Hessian eigenvalues admissible at a stable critical limit of an optimizer.
struct FilterBound {
  OptimizerKind kind = OptimizerKind::GD;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  /// 2(1 + beta) / alpha; for NAG its own cap (2 + 2 beta) / ((1 + 2 beta) alpha).
  double mu_cap = 0.0;
  std::vector<Interval> intervals;  // ascending, disjoint

  [[nodiscard]] double mu(double lambda) const { return filter_value(kind, rho, lambda); }
  [[nodiscard]] bool admits(double lambda, double slack = 0.0) const;
  /// Upper end of the interval starting at zero.
  [[nodiscard]] double positive_upper() const;
};

/// Throws UnsupportedKindError for SAMExperimental (no bound predicate).
[[nodiscard]] FilterBound filter_bound(const OptimizerSpec& spec);

/// Formats intervals as "[lo, hi] ∪ [lo, hi]" with up to `digits` significant digits.
[[nodiscard]] std::string format_intervals(const FilterBound& bound, int digits = 12);

/// Roots of the characteristic polynomial of the update Jacobian restricted to
/// one Hessian eigendirection: {1 - alpha mu} for memoryless kinds; the two
/// roots of nu^2 - nu(1 + beta - alpha mu) + beta otherwise (NAG:
/// nu^2 - nu(1 + beta)(1 - alpha lambda) + beta(1 - alpha lambda)).
[[nodiscard]] std::vector<std::complex<double>> predicted_update_eigenvalues(const OptimizerSpec& spec,
                                                                             double lambda);

/// Roots of nu^2 - b nu + c, complex pair when the discriminant is negative.
[[nodiscard]] std::vector<std::complex<double>> monic_quadratic_roots(double b, double c);

enum class JacobianMode { Numeric, AnalyticAtCritical };

/// Jacobian of the update map at s: m x m for memoryless kinds (acting on x),
/// 2m x 2m on the stacked (x, y) otherwise. The analytic mode requires
/// |grad f(x)| <= 1e-8 and a dense Hessian.
[[nodiscard]] Matrix update_jacobian(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s,
                                     JacobianMode mode);

/// Exact route for momentum kinds: the union over Hessian eigenvalues of the
/// spectra of the 2 x 2 blocks, computed with the dense solver.
[[nodiscard]] ComplexVector block_reduced_eigenvalues(const OptimizerSpec& spec, const Vector& hessian_eigenvalues);

struct SpectralReport {
  ComplexVector update_eigenvalues;
  double spectral_radius = 0.0;
  Vector hessian_eigenvalues;  // descending
  bool stable = false;
};

enum class BoundVerdict { InBounds, OutOfBounds, NotApplicable };
[[nodiscard]] std::string to_string(BoundVerdict verdict);

struct LimitCheck {
  SpectralReport report;
  BoundVerdict verdict = BoundVerdict::NotApplicable;
  double grad_norm = 0.0;
  double saturation_ratio = 0.0;  // max Hessian eigenvalue / positive_upper(); NaN without a bound
};

/// Gradient norm at or below which a limit counts as a critical point.
inline constexpr double kCriticalGradTol = 1e-8;
/// Slack on "spectral radius <= 1" covering finite-difference noise.
inline constexpr double kStabilityTol = 1e-6;

/// Requires result.status == Converged (PreconditionError otherwise).
[[nodiscard]] LimitCheck check_limit(const OptimizerSpec& spec, const Loss& loss, const RunResult& result,
                                     double tol = kStabilityTol);

/// Greedy nearest-neighbour pairing of two spectra; returns the largest
/// pairwise distance, or +inf when sizes differ.
[[nodiscard]] double spectrum_mismatch(const std::vector<std::complex<double>>& a,
                                       const std::vector<std::complex<double>>& b);

// ---------------------------------------------------------------------------
// Brute-force stability boundaries on 1-D quadratics f(x) = lambda x^2 / 2.

struct BoundaryCell {
  double alpha_lambda = 0.0;
  double beta = 0.0;
  RunStatus empirical = RunStatus::MaxIter;
  bool predicted_stable = false;
  [[nodiscard]] bool agrees() const { return (empirical == RunStatus::Converged) == predicted_stable; }
};

struct BoundaryScanConfig {
  OptimizerKind kind = OptimizerKind::GD;
  double rho = 0.0;  // SAM kinds only
  std::vector<double> betas;
  std::vector<double> alpha_lambdas;
  std::size_t iterations = 100000;
};

struct BoundaryScan {
  BoundaryScanConfig config;
  std::vector<BoundaryCell> cells;  // beta-major
  std::vector<double> empirical_boundary;  // per beta
  std::vector<double> predicted_boundary;  // per beta
  [[nodiscard]] std::size_t agreements() const;
};

/// Verdict of running the optimizer from x0 = 1 on the unit-curvature quadratic
/// with step alpha_lambda.
[[nodiscard]] RunStatus boundary_probe(OptimizerKind kind, double beta, double rho, double alpha_lambda,
                                       std::size_t iterations);

/// Largest alpha * lambda (lambda = 1) still converging, by bisection over
/// [lo, hi] until the bracket is narrower than `resolution`.
[[nodiscard]] double empirical_boundary(OptimizerKind kind, double beta, double rho, std::size_t iterations,
                                        double lo = 1e-2, double hi = 8.0, double resolution = 1e-5);

/// Same boundary from the predicted spectrum (bisection on max modulus < 1).
[[nodiscard]] double predicted_boundary(OptimizerKind kind, double beta, double rho);

/// Grid cells run through the worker pool.
[[nodiscard]] BoundaryScan stability_boundary_scan(const BoundaryScanConfig& config, std::size_t workers = 0);

}  // namespace eigfilter
