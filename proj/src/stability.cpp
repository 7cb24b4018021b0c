#include "eigfilter/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "eigfilter/parallel.hpp"
#include "eigfilter/spectral.hpp"

namespace eigfilter {

double filter_value(OptimizerKind kind, double rho, double lambda) {
  switch (kind) {
    case OptimizerKind::USAM: return lambda * (1.0 + rho * lambda);
    case OptimizerKind::USAM2: {
      const double f = 1.0 + rho * lambda;
      return lambda * f * f;
    }
    case OptimizerKind::HSAM: return lambda * (1.0 + rho * lambda * lambda);
    default: return lambda;
  }
}

bool FilterBound::admits(double lambda, double slack) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const Interval& iv) { return iv.contains(lambda, slack); });
}

double FilterBound::positive_upper() const {
  for (const auto& iv : intervals)
    if (iv.lo == 0.0) return iv.hi;
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

// Unique positive root of mu(lambda) = cap for a strictly increasing mu on
// [0, inf), bisected down to adjacent doubles.
double increasing_root(OptimizerKind kind, double rho, double cap) {
  double lo = 0.0;
  double hi = 1.0;
  while (filter_value(kind, rho, hi) < cap) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (filter_value(kind, rho, mid) < cap ? lo : hi) = mid;
  }
  // Pick the endpoint with the smaller defect.
  return std::abs(filter_value(kind, rho, lo) - cap) <= std::abs(filter_value(kind, rho, hi) - cap) ? lo : hi;
}

}  // namespace

FilterBound filter_bound(const OptimizerSpec& spec) {
  if (spec.kind == OptimizerKind::SAMExperimental)
    throw UnsupportedKindError("sam: normalized SAM has no eigenvalue-filter prediction");
  spec.validate();
  FilterBound b;
  b.kind = spec.kind;
  b.alpha = spec.alpha;
  b.beta = spec.effective_beta();
  b.rho = uses_rho(spec.kind) ? spec.rho : 0.0;
  b.mu_cap = 2.0 * (1.0 + b.beta) / b.alpha;

  switch (spec.kind) {
    case OptimizerKind::GD:
    case OptimizerKind::HeavyBall:
      b.intervals = {{0.0, b.mu_cap}};
      break;
    case OptimizerKind::NAG:
      b.mu_cap = (2.0 + 2.0 * b.beta) / ((1.0 + 2.0 * b.beta) * b.alpha);
      b.intervals = {{0.0, b.mu_cap}};
      break;
    case OptimizerKind::USAM: {
      const double root = std::sqrt(1.0 + 8.0 * (1.0 + b.beta) * b.rho / b.alpha);
      b.intervals = {{(-1.0 - root) / (2.0 * b.rho), -1.0 / b.rho}, {0.0, (root - 1.0) / (2.0 * b.rho)}};
      break;
    }
    case OptimizerKind::USAM2:
    case OptimizerKind::HSAM:
      b.intervals = {{0.0, increasing_root(spec.kind, b.rho, b.mu_cap)}};
      break;
    case OptimizerKind::SAMExperimental:
      break;
  }
  return b;
}

std::string format_intervals(const FilterBound& bound, int digits) {
  std::ostringstream out;
  out << std::setprecision(digits);
  for (std::size_t i = 0; i < bound.intervals.size(); ++i) {
    if (i > 0) out << " ∪ ";
    out << '[' << bound.intervals[i].lo << ", " << bound.intervals[i].hi << ']';
  }
  return out.str();
}

std::vector<std::complex<double>> monic_quadratic_roots(double b, double c) {
  const double disc = b * b - 4.0 * c;
  if (disc < 0.0) {
    const double im = 0.5 * std::sqrt(-disc);
    return {{0.5 * b, im}, {0.5 * b, -im}};
  }
  const double sq = std::sqrt(disc);
  const double r1 = 0.5 * (b + std::copysign(sq, b));
  const double r2 = r1 != 0.0 ? c / r1 : 0.5 * (b - std::copysign(sq, b));
  return {{r1, 0.0}, {r2, 0.0}};
}

std::vector<std::complex<double>> predicted_update_eigenvalues(const OptimizerSpec& spec, double lambda) {
  spec.validate();
  const double a = spec.alpha;
  const double beta = spec.effective_beta();
  if (spec.kind == OptimizerKind::NAG && beta > 0.0) {
    const double damp = 1.0 - a * lambda;
    return monic_quadratic_roots((1.0 + beta) * damp, beta * damp);
  }
  const double mu = filter_value(spec.kind, spec.rho, lambda);
  if (spec.memoryless()) return {{1.0 - a * mu, 0.0}};
  return monic_quadratic_roots(1.0 + beta - a * mu, beta);
}

namespace {

Matrix filter_matrix(const OptimizerSpec& spec, const Matrix& h) {
  const auto m = h.rows();
  const Matrix id = Matrix::Identity(m, m);
  switch (spec.kind) {
    case OptimizerKind::USAM: return h * (id + spec.rho * h);
    case OptimizerKind::USAM2: {
      const Matrix f = id + spec.rho * h;
      return h * f * f;
    }
    case OptimizerKind::HSAM: return h * (id + spec.rho * h * h);
    default: return h;
  }
}

Matrix momentum_block(const Matrix& top_left, const Matrix& top_right) {
  const auto m = top_left.rows();
  Matrix j = Matrix::Zero(2 * m, 2 * m);
  j.topLeftCorner(m, m) = top_left;
  j.topRightCorner(m, m) = top_right;
  j.bottomLeftCorner(m, m) = Matrix::Identity(m, m);
  return j;
}

}  // namespace

Matrix update_jacobian(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s, JacobianMode mode) {
  spec.validate();
  const double beta = spec.effective_beta();
  if (mode == JacobianMode::Numeric) {
    if (spec.memoryless()) {
      const Vector& y = s.y;
      return numeric_jacobian([&](const Vector& x) { return step(spec, loss, {x, y}).x; }, s.x);
    }
    return numeric_jacobian(
        [&](const Vector& st) { return step(spec, loss, AugmentedState::unstack(st)).stacked(); }, s.stacked());
  }

  if (spec.kind == OptimizerKind::SAMExperimental)
    throw UnsupportedKindError("sam: no analytic Jacobian for normalized SAM");
  const double gnorm = loss.gradient(s.x).norm();
  if (gnorm > kCriticalGradTol) {
    std::ostringstream msg;
    msg << "update_jacobian: analytic mode needs a critical point, |grad f| = " << gnorm;
    throw PreconditionError(msg.str());
  }
  if (!loss.has_dense_hessian()) throw PreconditionError("update_jacobian: dense Hessian unavailable");
  const Matrix h = loss.hessian(s.x);
  const auto m = h.rows();
  const Matrix id = Matrix::Identity(m, m);
  if (spec.kind == OptimizerKind::NAG && beta > 0.0) {
    const Matrix damp = id - spec.alpha * h;
    return momentum_block((1.0 + beta) * damp, -beta * damp);
  }
  const Matrix mu = filter_matrix(spec, h);
  if (spec.memoryless()) return id - spec.alpha * mu;
  return momentum_block((1.0 + beta) * id - spec.alpha * mu, -beta * id);
}

ComplexVector block_reduced_eigenvalues(const OptimizerSpec& spec, const Vector& hessian_eigenvalues) {
  spec.validate();
  const double beta = spec.effective_beta();
  const bool memoryless = spec.memoryless();
  const Eigen::Index per = memoryless ? 1 : 2;
  ComplexVector out(per * hessian_eigenvalues.size());
  for (Eigen::Index i = 0; i < hessian_eigenvalues.size(); ++i) {
    const double lambda = hessian_eigenvalues[i];
    if (memoryless) {
      out[i] = 1.0 - spec.alpha * filter_value(spec.kind, spec.rho, lambda);
      continue;
    }
    Eigen::Matrix2d block;
    if (spec.kind == OptimizerKind::NAG) {
      const double damp = 1.0 - spec.alpha * lambda;
      block << (1.0 + beta) * damp, -beta * damp, 1.0, 0.0;
    } else {
      block << 1.0 + beta - spec.alpha * filter_value(spec.kind, spec.rho, lambda), -beta, 1.0, 0.0;
    }
    out.segment(2 * i, 2) = dense_eigenvalues(block);
  }
  return out;
}

std::string to_string(BoundVerdict verdict) {
  switch (verdict) {
    case BoundVerdict::InBounds: return "InBounds";
    case BoundVerdict::OutOfBounds: return "OutOfBounds";
    case BoundVerdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

LimitCheck check_limit(const OptimizerSpec& spec, const Loss& loss, const RunResult& result, double tol) {
  if (result.status != RunStatus::Converged) throw PreconditionError("check_limit: run did not converge");
  LimitCheck check;
  const AugmentedState& s = result.final_state;
  check.grad_norm = loss.gradient(s.x).norm();

  SpectralReport& rep = check.report;
  rep.update_eigenvalues = dense_eigenvalues(update_jacobian(spec, loss, s, JacobianMode::Numeric));
  rep.spectral_radius = spectral_radius(rep.update_eigenvalues);
  rep.stable = rep.spectral_radius <= 1.0 + tol;
  if (loss.has_dense_hessian()) {
    rep.hessian_eigenvalues = symmetric_eigenvalues(loss.hessian(s.x));
  } else {
    rep.hessian_eigenvalues = top_hessian_eigenvalues(loss, s.x, std::min<std::size_t>(3, loss.dim())).values;
  }

  check.saturation_ratio = std::numeric_limits<double>::quiet_NaN();
  if (spec.kind == OptimizerKind::SAMExperimental) return check;
  const FilterBound bound = filter_bound(spec);
  const double top = rep.hessian_eigenvalues.size() > 0 ? rep.hessian_eigenvalues[0] : 0.0;
  check.saturation_ratio = top / bound.positive_upper();
  if (check.grad_norm <= kCriticalGradTol) {
    const bool inside = (rep.hessian_eigenvalues.array().unaryExpr([&](double l) {
                          return bound.admits(l, tol) ? 1.0 : 0.0;
                        }) > 0.5).all();
    check.verdict = inside ? BoundVerdict::InBounds : BoundVerdict::OutOfBounds;
  }
  return check;
}

double spectrum_mismatch(const std::vector<std::complex<double>>& a, const std::vector<std::complex<double>>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  auto order = [](const std::complex<double>& u, const std::complex<double>& v) {
    if (std::abs(u) != std::abs(v)) return std::abs(u) < std::abs(v);
    return std::arg(u) < std::arg(v);
  };
  std::vector<std::complex<double>> sa = a;
  std::sort(sa.begin(), sa.end(), order);
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const auto& u : sa) {
    std::size_t best = b.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(u - b[j]);
      // Ties go to the smaller phase difference.
      if (d < best_d || (d == best_d && best < b.size() &&
                         std::abs(std::arg(b[j]) - std::arg(u)) < std::abs(std::arg(b[best]) - std::arg(u)))) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_d);
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

OptimizerSpec probe_spec(OptimizerKind kind, double beta, double rho, double alpha) {
  OptimizerSpec spec;
  spec.kind = kind;
  spec.alpha = alpha;
  spec.beta = kind == OptimizerKind::GD ? 0.0 : beta;
  spec.rho = uses_rho(kind) ? rho : 0.0;
  return spec;
}

bool predicted_stable(const OptimizerSpec& spec) {
  for (const auto& ev : predicted_update_eigenvalues(spec, 1.0))
    if (std::abs(ev) >= 1.0) return false;
  return true;
}

}  // namespace

std::size_t BoundaryScan::agreements() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.agrees(); }));
}

RunStatus boundary_probe(OptimizerKind kind, double beta, double rho, double alpha_lambda, std::size_t iterations) {
  static const LossPtr unit = make_quadratic({{1.0}, 0, {}});
  StopCriteria stop;
  stop.max_iters = iterations;
  stop.tail_length = 0;
  return run(probe_spec(kind, beta, rho, alpha_lambda), *unit, Vector::Ones(1), stop).status;
}

double empirical_boundary(OptimizerKind kind, double beta, double rho, std::size_t iterations, double lo, double hi,
                          double resolution) {
  if (boundary_probe(kind, beta, rho, lo, iterations) != RunStatus::Converged)
    throw PreconditionError("empirical_boundary: lower bracket does not converge");
  if (boundary_probe(kind, beta, rho, hi, iterations) == RunStatus::Converged)
    throw PreconditionError("empirical_boundary: upper bracket converges");
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (boundary_probe(kind, beta, rho, mid, iterations) == RunStatus::Converged ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double predicted_boundary(OptimizerKind kind, double beta, double rho) {
  double lo = 0.0;
  double hi = 1.0;
  while (predicted_stable(probe_spec(kind, beta, rho, hi))) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (predicted_stable(probe_spec(kind, beta, rho, mid)) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

BoundaryScan stability_boundary_scan(const BoundaryScanConfig& config, std::size_t workers) {
  BoundaryScan scan;
  scan.config = config;
  const std::size_t nb = config.betas.size();
  const std::size_t na = config.alpha_lambdas.size();
  scan.cells.resize(nb * na);
  parallel_for(nb * na, workers, [&](std::size_t idx) {
    const double beta = config.betas[idx / na];
    const double al = config.alpha_lambdas[idx % na];
    BoundaryCell& cell = scan.cells[idx];
    cell.alpha_lambda = al;
    cell.beta = beta;
    cell.empirical = boundary_probe(config.kind, beta, config.rho, al, config.iterations);
    cell.predicted_stable = predicted_stable(probe_spec(config.kind, beta, config.rho, al));
  });
  scan.empirical_boundary.resize(nb);
  scan.predicted_boundary.resize(nb);
  parallel_for(nb, workers, [&](std::size_t i) {
    const double beta = config.betas[i];
    scan.predicted_boundary[i] = predicted_boundary(config.kind, beta, config.rho);
    const double guess = scan.predicted_boundary[i];
    scan.empirical_boundary[i] =
        empirical_boundary(config.kind, beta, config.rho, config.iterations, 0.05 * guess, 4.0 * guess, 1e-5);
  });
  return scan;
}

}  // namespace eigfilter
