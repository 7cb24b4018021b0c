#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eigfilter/loss.hpp"
#include "eigfilter/mlp.hpp"
#include "eigfilter/optimizer.hpp"
#include "eigfilter/stability.hpp"

namespace eigfilter {

struct RunRecord {
  std::size_t run_id = 0;
  OptimizerSpec spec;
  std::string loss_id;
  std::uint64_t x0_seed = 0;
  RunStatus status = RunStatus::MaxIter;
  std::size_t iters = 0;
  Vector limit_x;
  double grad_norm_at_limit = 0.0;
  std::optional<double> update_spectral_radius;  // converged runs only
  std::vector<double> hessian_top;               // up to three, descending
  BoundVerdict bound_verdict = BoundVerdict::NotApplicable;
  std::optional<double> saturation_ratio;
};

struct SweepConfig {
  std::string loss_id;
  ParamMap loss_params;
  std::vector<OptimizerKind> kinds;
  std::vector<double> alphas;
  std::vector<double> betas = {0.0};  // ignored for GD
  std::vector<double> rhos = {0.0};   // used by the SAM kinds only
  std::size_t n_inits = 1;
  double init_box = 1.0;  // x0 uniform on [-init_box, init_box]^m
  std::uint64_t master_seed = 0;
  StopCriteria stop;
};

struct SweepSummary {
  std::size_t total = 0;
  std::size_t converged = 0;
  std::size_t diverged = 0;
  std::size_t max_iter = 0;
  std::size_t in_bounds = 0;
  std::size_t out_of_bounds = 0;
  std::size_t not_applicable = 0;
  /// Converged runs with update spectral radius above 1 + kStabilityTol.
  std::size_t unstable_converged = 0;

  void add(const RunRecord& r);
};

struct SweepResult {
  std::vector<RunRecord> records;  // ordered by run_id
  SweepSummary summary;
};

/// Per-record seed derived from (master_seed, run_id) only.
[[nodiscard]] std::uint64_t record_seed(std::uint64_t master_seed, std::size_t run_id);

/// Grid points in expansion order: kind, alpha, beta, rho, init.
[[nodiscard]] std::vector<OptimizerSpec> expand_grid(const SweepConfig& cfg);

[[nodiscard]] SweepResult sweep(const SweepConfig& cfg, std::size_t workers = 0);

/// Runs one optimizer from x0 and fills every RunRecord field except run_id
/// and x0_seed.
[[nodiscard]] RunRecord run_and_check(const OptimizerSpec& spec, const Loss& loss, const Vector& x0,
                                      const StopCriteria& stop);

inline constexpr const char* kRecordCsvHeader =
    "run_id,kind,alpha,beta,rho,loss_id,x0_seed,status,iters,grad_norm,spectral_radius,lam1,lam2,lam3,"
    "bound_verdict,saturation_ratio";

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
/// One row per optimizer kind plus an "all" row.
void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records);
void print_summary_table(std::ostream& out, const std::vector<RunRecord>& records);

// ---------------------------------------------------------------------------

/// Fixed points of a 1-D update map on [lo, hi]: grid points with
/// |step(s) - s| <= grid_tol merged into maximal intervals. Interior endpoints
/// are bisected (to 1e-10) on |g(s)| <= refine_tol, where g is the gradient
/// query; window edges are left as is.
struct FixedPointScanConfig {
  double lo = -2.0;
  double hi = 5.0;
  std::size_t n_grid = 70001;
  double grid_tol = 1e-12;
  double refine_tol = 1e-24;
  double endpoint_resolution = 1e-10;
};

[[nodiscard]] std::vector<Interval> fixed_point_scan_1d(const OptimizerSpec& spec, const Loss& loss,
                                                        const FixedPointScanConfig& cfg = {});

/// "(-inf,1] ∪ [1.5, +inf) (window-clipped)" style rendering; intervals
/// touching the window edge are shown as unbounded on that side.
[[nodiscard]] std::string format_fixed_point_set(const std::vector<Interval>& intervals, double lo, double hi,
                                                 int digits = 10);

// ---------------------------------------------------------------------------

struct EosConfig {
  MlpSpec mlp;
  SyntheticDataSpec data;
  std::uint64_t init_seed = 0;
  OptimizerSpec optimizer;
  std::size_t epochs = 1000;
  std::size_t probe_every = 50;
  std::size_t top_k = 3;
  double lanczos_tol = 1e-6;
};

struct EosPoint {
  std::size_t step = 0;
  double loss = 0.0;
  std::vector<double> top;  // descending
};

struct EosResult {
  std::vector<EosPoint> series;
  bool diverged = false;
  Vector final_params;
  double final_lambda_max = 0.0;
  /// final_lambda_max divided by the optimizer's positive admissible endpoint
  /// (2/alpha for GD).
  double saturation_ratio = 0.0;
};

/// Full-batch training with periodic top-k Hessian probes; the final state is
/// always probed.
[[nodiscard]] EosResult eos_experiment(const EosConfig& cfg);

void write_eos_csv(std::ostream& out, const EosResult& result);

// ---------------------------------------------------------------------------

struct ScalingPoint {
  double alpha = 0.0;
  double lambda_star = 0.0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
};

/// Least-squares slope of log(positive admissible endpoint) against log(alpha).
/// Requires the alphas to span at least three decades.
[[nodiscard]] ScalingFit scaling_study(OptimizerKind kind, double rho, double beta, const std::vector<double>& alphas);

// ---------------------------------------------------------------------------

void write_boundary_csv(std::ostream& out, const BoundaryScan& scan);
/// One row per beta: empirical and predicted boundary in alpha * lambda.
void write_boundary_lines_csv(std::ostream& out, const BoundaryScan& scan);
void write_spectral_report_csv(std::ostream& out, const SpectralReport& report);

}  // namespace eigfilter
