#include "eigfilter/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>

namespace eigfilter {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::GD: return "gd";
    case OptimizerKind::HeavyBall: return "hb";
    case OptimizerKind::NAG: return "nag";
    case OptimizerKind::USAM: return "usam";
    case OptimizerKind::USAM2: return "usam2";
    case OptimizerKind::HSAM: return "hsam";
    case OptimizerKind::SAMExperimental: return "sam";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "gd") return OptimizerKind::GD;
  if (n == "hb" || n == "heavyball" || n == "heavy_ball") return OptimizerKind::HeavyBall;
  if (n == "nag") return OptimizerKind::NAG;
  if (n == "usam") return OptimizerKind::USAM;
  if (n == "usam2") return OptimizerKind::USAM2;
  if (n == "hsam") return OptimizerKind::HSAM;
  if (n == "sam" || n == "sam-experimental" || n == "sam_experimental") return OptimizerKind::SAMExperimental;
  throw InvalidSpecError("unknown optimizer kind '" + name + "'");
}

bool uses_rho(OptimizerKind kind) {
  return kind == OptimizerKind::USAM || kind == OptimizerKind::USAM2 || kind == OptimizerKind::HSAM ||
         kind == OptimizerKind::SAMExperimental;
}

const std::vector<OptimizerKind>& smooth_kinds() {
  static const std::vector<OptimizerKind> kinds = {OptimizerKind::GD,   OptimizerKind::HeavyBall,
                                                   OptimizerKind::NAG,  OptimizerKind::USAM,
                                                   OptimizerKind::USAM2, OptimizerKind::HSAM};
  return kinds;
}

void OptimizerSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidSpecError("optimizer: alpha must be positive");
  if (kind != OptimizerKind::GD && !(beta >= 0.0 && beta < 1.0))
    throw InvalidSpecError("optimizer: beta must lie in [0, 1)");
  if (uses_rho(kind) && (!(rho > 0.0) || !std::isfinite(rho)))
    throw InvalidSpecError("optimizer: rho must be positive for " + to_string(kind));
  if (kind == OptimizerKind::SAMExperimental && !(sam_guard_eps > 0.0))
    throw InvalidSpecError("optimizer: sam_guard_eps must be positive");
}

Vector AugmentedState::stacked() const {
  Vector s(x.size() + y.size());
  s << x, y;
  return s;
}

AugmentedState AugmentedState::unstack(const Vector& s) {
  const auto m = s.size() / 2;
  return {s.head(m), s.tail(m)};
}

namespace {

Vector checked_gradient(const Loss& loss, const Vector& at, const AugmentedState& s) {
  Vector g = loss.gradient(at);
  if (!g.allFinite()) throw DivergenceError("non-finite gradient", s);
  return g;
}

}  // namespace

Vector gradient_query(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s) {
  const Vector& x = s.x;
  switch (spec.kind) {
    case OptimizerKind::GD:
    case OptimizerKind::HeavyBall:
      return checked_gradient(loss, x, s);
    case OptimizerKind::NAG:
      return checked_gradient(loss, x + spec.beta * (x - s.y), s);
    case OptimizerKind::USAM: {
      const Vector g = checked_gradient(loss, x, s);
      return checked_gradient(loss, x + spec.rho * g, s);
    }
    case OptimizerKind::USAM2: {
      const Vector g = checked_gradient(loss, x, s);
      const Vector first = x + spec.rho * g;
      const Vector g1 = checked_gradient(loss, first, s);
      return checked_gradient(loss, first + spec.rho * g1, s);
    }
    case OptimizerKind::HSAM: {
      const Vector g = checked_gradient(loss, x, s);
      const Vector hg = loss.hvp(x, g);
      if (!hg.allFinite()) throw DivergenceError("non-finite Hessian-vector product", s);
      return checked_gradient(loss, x + spec.rho * hg, s);
    }
    case OptimizerKind::SAMExperimental: {
      const Vector g = checked_gradient(loss, x, s);
      const double scale = spec.rho / std::max(g.norm(), spec.sam_guard_eps);
      return checked_gradient(loss, x + scale * g, s);
    }
  }
  throw UnsupportedKindError("unhandled optimizer kind");
}

namespace {

Vector momentum_part(double beta, const AugmentedState& s) {
  if (beta == 0.0) return s.x;
  return (1.0 + beta) * s.x - beta * s.y;
}

}  // namespace

AugmentedState step(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s) {
  const Vector g = gradient_query(spec, loss, s);
  AugmentedState next;
  next.x = momentum_part(spec.effective_beta(), s) - spec.alpha * g;
  next.y = s.x;
  return next;
}

AugmentedState StandardForm::apply(const AugmentedState& s) const {
  const AugmentedState d = d_apply(s);
  const AugmentedState g = g_apply(s);
  return {d.x - alpha * g.x, d.y - alpha * g.y};
}

StandardForm standard_form(const OptimizerSpec& spec, LossPtr loss) {
  if (spec.kind == OptimizerKind::SAMExperimental)
    throw UnsupportedKindError("sam: normalized SAM is not C^1 and has no standard form");
  spec.validate();
  StandardForm form;
  form.alpha = spec.alpha;
  const double beta = spec.effective_beta();
  form.d_apply = [beta](const AugmentedState& s) { return AugmentedState{momentum_part(beta, s), s.x}; };
  form.g_apply = [spec, loss](const AugmentedState& s) {
    return AugmentedState{gradient_query(spec, *loss, s), Vector::Zero(s.y.size())};
  };
  return form;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::Diverged: return "Diverged";
    case RunStatus::MaxIter: return "MaxIter";
  }
  return "?";
}

RunResult run(const OptimizerSpec& spec, const Loss& loss, const Vector& x0, const StopCriteria& stop) {
  spec.validate();
  if (static_cast<std::size_t>(x0.size()) != loss.dim())
    throw std::invalid_argument("run: x0 dimension does not match the loss");

  RunResult result;
  AugmentedState s = AugmentedState::at(x0);
  std::deque<Vector> tail;
  std::size_t quiet = 0;
  for (std::size_t k = 0; k < stop.max_iters; ++k) {
    AugmentedState next;
    try {
      next = step(spec, loss, s);
    } catch (const DivergenceError& e) {
      result.status = RunStatus::Diverged;
      result.iters = k;
      result.final_state = e.state();
      result.tail.assign(tail.begin(), tail.end());
      return result;
    }
    result.iters = k + 1;
    if (!next.x.allFinite() || next.x.norm() > stop.blowup_radius) {
      result.status = RunStatus::Diverged;
      result.final_state = std::move(next);
      result.tail.assign(tail.begin(), tail.end());
      return result;
    }
    const double residual = std::sqrt((next.x - s.x).squaredNorm() + (next.y - s.y).squaredNorm());
    s = std::move(next);
    if (stop.tail_length > 0) {
      if (tail.size() == stop.tail_length) tail.pop_front();
      tail.push_back(s.x);
    }
    quiet = residual <= stop.fixed_point_tol ? quiet + 1 : 0;
    if (quiet >= stop.window) {
      result.status = RunStatus::Converged;
      break;
    }
  }
  if (result.status != RunStatus::Converged) result.status = RunStatus::MaxIter;
  result.final_state = std::move(s);
  result.tail.assign(tail.begin(), tail.end());
  return result;
}

}  // namespace eigfilter
