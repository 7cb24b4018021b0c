#pragma once

#include <functional>
#include <string>
#include <vector>

#include "eigfilter/loss.hpp"

namespace eigfilter {

enum class OptimizerKind { GD, HeavyBall, NAG, USAM, USAM2, HSAM, SAMExperimental };

[[nodiscard]] std::string to_string(OptimizerKind kind);
/// Accepts gd, hb / heavyball, nag, usam, usam2, hsam, sam.
[[nodiscard]] OptimizerKind parse_optimizer_kind(const std::string& name);
[[nodiscard]] bool uses_rho(OptimizerKind kind);
[[nodiscard]] const std::vector<OptimizerKind>& smooth_kinds();

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::GD;
  double alpha = 0.1;
  double beta = 0.0;
  double rho = 0.0;
  double sam_guard_eps = 1e-12;

  /// Throws InvalidSpecError when alpha <= 0, beta outside [0, 1), or rho <= 0
  /// for the SAM kinds.
  void validate() const;

  /// Momentum vanishes (always for GD); the update acts on x alone and its
  /// Jacobian is m x m.
  [[nodiscard]] bool memoryless() const { return kind == OptimizerKind::GD || beta == 0.0; }
  [[nodiscard]] double effective_beta() const { return kind == OptimizerKind::GD ? 0.0 : beta; }
};

/// (x, y): current iterate and previous iterate.
struct AugmentedState {
  Vector x;
  Vector y;

  static AugmentedState at(const Vector& x0) { return {x0, x0}; }
  [[nodiscard]] Vector stacked() const;
  static AugmentedState unstack(const Vector& s);
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, AugmentedState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  [[nodiscard]] const AugmentedState& state() const noexcept { return state_; }

 private:
  AugmentedState state_;
};

class UnsupportedKindError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The gradient query g(x, y) of the update x+ = (1+b)x - b y - alpha g.
/// Throws DivergenceError on a non-finite result.
[[nodiscard]] Vector gradient_query(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s);

/// One iteration: x+ = (1+b)x - b y - alpha g(x, y), y+ = x.
[[nodiscard]] AugmentedState step(const OptimizerSpec& spec, const Loss& loss, const AugmentedState& s);

/// Block form s+ = D s - alpha g(s) with D = [(1+b)I, -bI; I, 0] and g
/// zero in the y-block.
struct StandardForm {
  std::function<AugmentedState(const AugmentedState&)> d_apply;
  std::function<AugmentedState(const AugmentedState&)> g_apply;
  double alpha = 0.0;

  [[nodiscard]] AugmentedState apply(const AugmentedState& s) const;
};

/// Throws UnsupportedKindError for SAMExperimental, whose update is not C^1.
[[nodiscard]] StandardForm standard_form(const OptimizerSpec& spec, LossPtr loss);

struct StopCriteria {
  std::size_t max_iters = 100000;
  double fixed_point_tol = 1e-10;
  std::size_t window = 10;
  double blowup_radius = 1e8;
  std::size_t tail_length = 16;
};

enum class RunStatus { Converged, Diverged, MaxIter };
[[nodiscard]] std::string to_string(RunStatus status);

struct RunResult {
  RunStatus status = RunStatus::MaxIter;
  std::size_t iters = 0;
  AugmentedState final_state;
  std::vector<Vector> tail;  // last x iterates, oldest first
};

/// Iterates from (x0, x0). Converged once |step(s) - s| <= fixed_point_tol for
/// `window` consecutive iterations; Diverged when |x| > blowup_radius or a
/// value turns non-finite (checked first each iteration).
[[nodiscard]] RunResult run(const OptimizerSpec& spec, const Loss& loss, const Vector& x0,
                            const StopCriteria& stop = {});

}  // namespace eigfilter
