// eigfilter command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>

#include "eigfilter/config.hpp"
#include "eigfilter/harness.hpp"
#include "eigfilter/parallel.hpp"
#include "eigfilter/spectral.hpp"
#include "eigfilter/svg.hpp"

namespace fs = std::filesystem;
using namespace eigfilter;
using namespace eigfilter::cli;

namespace {

constexpr int kOk = 0;
constexpr int kScientificFailure = 1;
constexpr int kUsageError = 2;

struct Overrides {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> kind;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> rho;
  std::optional<std::size_t> max_iters;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_config = true) {
  auto* opt = cmd->add_option("-c,--config", o.config_path, "YAML config file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out_dir, "output directory (overrides output.dir)");
}

void add_optimizer_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--kind", o.kind, "optimizer kind: gd, hb, nag, usam, usam2, hsam, sam");
  cmd->add_option("--alpha", o.alpha, "step size");
  cmd->add_option("--beta", o.beta, "momentum");
  cmd->add_option("--rho", o.rho, "SAM radius");
}

Config load(const Overrides& o) {
  Config cfg = o.config_path.empty() ? Config{} : load_config(o.config_path);
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.max_iters) {
    cfg.stop.max_iters = *o.max_iters;
    if (cfg.sweep) cfg.sweep->stop.max_iters = *o.max_iters;
  }
  if (o.kind || o.alpha || o.beta || o.rho) {
    OptimizerSpec spec = cfg.optimizer.value_or(OptimizerSpec{});
    if (o.kind) spec.kind = parse_optimizer_kind(*o.kind);
    if (o.alpha) spec.alpha = *o.alpha;
    if (o.beta) spec.beta = *o.beta;
    if (o.rho) spec.rho = *o.rho;
    spec.validate();
    cfg.optimizer = spec;
    if (cfg.eos) cfg.eos->eos.optimizer = spec;
  }
  return cfg;
}

template <typename T>
const T& need(const std::optional<T>& v, const char* section) {
  if (!v) throw ConfigError(std::string("config has no '") + section + "' section", 0);
  return *v;
}

std::ofstream open_out(const Config& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  const fs::path path = fs::path(cfg.output_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_text(const Config& cfg, const std::string& name, const std::string& text) {
  auto out = open_out(cfg, name);
  out << text;
}

int cmd_derivcheck(const Overrides& o) {
  Config cfg = load(o);
  const auto& ls = need(cfg.loss, "loss");
  const DerivcheckSection dc = cfg.derivcheck.value_or(DerivcheckSection{});
  const LossPtr loss = make_loss(ls.id, ls.params);
  std::mt19937_64 rng(o.seed.value_or(dc.seed));
  std::uniform_real_distribution<double> u(-dc.box, dc.box);
  double worst_grad = 0, worst_hvp = 0;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < dc.n_probes; ++i) {
    Vector x(static_cast<Eigen::Index>(loss->dim()));
    for (auto& v : x) v = u(rng);
    const DerivativeReport r = check_derivatives(*loss, x, dc.tol);
    worst_grad = std::max(worst_grad, r.grad_max_rel_error);
    worst_hvp = std::max(worst_hvp, r.hvp_max_rel_error);
    if (!r.passed) ++failures;
  }
  std::cout << "loss " << ls.id << " (dim " << loss->dim() << "), " << dc.n_probes << " probes\n"
            << "  max gradient rel error: " << worst_grad << "\n"
            << "  max hvp rel error:      " << worst_hvp << "\n"
            << (failures == 0 ? "PASS" : "FAIL") << " (" << failures << " probes above tol " << dc.tol << ")\n";
  return failures == 0 ? kOk : kScientificFailure;
}

int cmd_bounds(const std::string& kind, double alpha, double beta, double rho, int digits) {
  OptimizerSpec spec;
  spec.kind = parse_optimizer_kind(kind);
  spec.alpha = alpha;
  spec.beta = beta;
  spec.rho = rho;
  spec.validate();
  std::cout << format_intervals(filter_bound(spec), digits) << "\n";
  return kOk;
}

int cmd_run(const Overrides& o) {
  Config cfg = load(o);
  const auto& ls = need(cfg.loss, "loss");
  const OptimizerSpec spec = need(cfg.optimizer, "optimizer");
  const LossPtr loss = make_loss(ls.id, ls.params);
  Vector x0 = Vector::Ones(static_cast<Eigen::Index>(loss->dim()));
  if (!cfg.x0.empty()) x0 = Eigen::Map<const Vector>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));

  RunRecord rec = run_and_check(spec, *loss, x0, cfg.stop);
  rec.loss_id = ls.id;
  {
    auto out = open_out(cfg, "records.csv");
    write_records_csv(out, {rec});
  }
  std::cout << to_string(spec.kind) << " on " << ls.id << ": " << to_string(rec.status) << " after " << rec.iters
            << " iterations\n";
  if (rec.status != RunStatus::Converged) return kOk;

  const RunResult result{rec.status, rec.iters, AugmentedState{rec.limit_x, rec.limit_x}, {}};
  std::cout << "  grad norm " << rec.grad_norm_at_limit << ", verdict " << to_string(rec.bound_verdict) << "\n";
  if (spec.kind != OptimizerKind::SAMExperimental) {
    const LimitCheck check = check_limit(spec, *loss, result);
    auto out = open_out(cfg, "spectrum.csv");
    write_spectral_report_csv(out, check.report);
    write_text(cfg, "spectrum.svg",
               svg_complex_scatter(check.report.update_eigenvalues, "update-map eigenvalues at the limit"));
    std::cout << "  update spectral radius " << check.report.spectral_radius << "\n";
  }
  const bool unstable = rec.update_spectral_radius && *rec.update_spectral_radius > 1.0 + kStabilityTol;
  const bool failed = unstable || rec.bound_verdict == BoundVerdict::OutOfBounds;
  return failed ? kScientificFailure : kOk;
}

int cmd_sweep(const Overrides& o) {
  Config cfg = load(o);
  SweepConfig sc = need(cfg.sweep, "sweep");
  if (o.seed) sc.master_seed = *o.seed;
  const SweepResult res = sweep(sc, resolve_workers(o.workers));
  {
    auto out = open_out(cfg, "records.csv");
    write_records_csv(out, res.records);
  }
  {
    auto out = open_out(cfg, "summary.csv");
    write_summary_csv(out, res.records);
  }
  print_summary_table(std::cout, res.records);
  const bool failed = res.summary.unstable_converged > 0 || res.summary.out_of_bounds > 0;
  std::cout << (failed ? "FAIL" : "PASS") << ": " << res.summary.unstable_converged
            << " converged runs with spectral radius above 1, " << res.summary.out_of_bounds
            << " limits outside the filter bound\n";
  return failed ? kScientificFailure : kOk;
}

int cmd_scan(const Overrides& o, std::optional<double> lo, std::optional<double> hi) {
  Config cfg = load(o);
  const auto& ls = need(cfg.loss, "loss");
  const OptimizerSpec spec = need(cfg.optimizer, "optimizer");
  FixedPointScanConfig sc = cfg.scan.value_or(ScanSection{}).scan;
  if (lo) sc.lo = *lo;
  if (hi) sc.hi = *hi;
  const LossPtr loss = make_loss(ls.id, ls.params);
  const auto intervals = fixed_point_scan_1d(spec, *loss, sc);
  {
    auto out = open_out(cfg, "fixed_points.csv");
    out << "lo,hi\n" << std::setprecision(17);
    for (const auto& iv : intervals) out << iv.lo << ',' << iv.hi << '\n';
  }
  std::cout << "fixed points: " << format_fixed_point_set(intervals, sc.lo, sc.hi) << "\n";
  return kOk;
}

int cmd_boundary(const Overrides& o) {
  Config cfg = load(o);
  BoundarySection b = cfg.boundary.value_or(BoundarySection{});
  if (o.kind) b.kind = parse_optimizer_kind(*o.kind);
  if (o.rho) b.rho = *o.rho;
  if (o.beta) b.betas = {*o.beta};
  BoundaryScanConfig sc;
  sc.kind = b.kind;
  sc.rho = b.rho;
  sc.betas = b.betas;
  sc.iterations = b.iterations;
  for (std::size_t i = 0; i < b.alpha_lambda_n; ++i)
    sc.alpha_lambdas.push_back(b.alpha_lambda_lo + (b.alpha_lambda_hi - b.alpha_lambda_lo) * static_cast<double>(i) /
                                                       static_cast<double>(b.alpha_lambda_n - 1));
  const BoundaryScan scan = stability_boundary_scan(sc, resolve_workers(o.workers));
  {
    auto out = open_out(cfg, "boundary.csv");
    write_boundary_csv(out, scan);
  }
  {
    auto out = open_out(cfg, "boundary_lines.csv");
    write_boundary_lines_csv(out, scan);
  }
  write_text(cfg, "boundary.svg", svg_boundary_heatmap(scan, to_string(b.kind) + " stability boundary"));

  bool ok = true;
  std::cout << std::setprecision(8);
  for (std::size_t i = 0; i < scan.config.betas.size(); ++i) {
    const double gap = std::abs(scan.empirical_boundary[i] - scan.predicted_boundary[i]);
    ok = ok && gap <= b.tolerance;
    std::cout << "beta " << scan.config.betas[i] << ": empirical " << scan.empirical_boundary[i] << ", predicted "
              << scan.predicted_boundary[i] << ", gap " << gap << "\n";
  }
  std::cout << scan.agreements() << "/" << scan.cells.size() << " grid cells agree with the prediction\n"
            << (ok ? "PASS" : "FAIL") << " (tolerance " << b.tolerance << ")\n";
  return ok ? kOk : kScientificFailure;
}

int cmd_eos(const Overrides& o) {
  Config cfg = load(o);
  EosConfig ec = need(cfg.eos, "eos").eos;
  const EosResult res = eos_experiment(ec);
  {
    auto out = open_out(cfg, "eos.csv");
    write_eos_csv(out, res);
  }
  const double cap = ec.optimizer.kind == OptimizerKind::SAMExperimental
                         ? std::numeric_limits<double>::quiet_NaN()
                         : filter_bound(ec.optimizer).positive_upper();
  std::vector<Series> series(ec.top_k);
  for (std::size_t k = 0; k < ec.top_k; ++k) series[k].label = "lambda " + std::to_string(k + 1);
  Series limit{"filter edge", {}, {}, true};
  for (const auto& p : res.series) {
    for (std::size_t k = 0; k < ec.top_k; ++k) {
      series[k].x.push_back(static_cast<double>(p.step));
      series[k].y.push_back(k < p.top.size() ? p.top[k] : std::numeric_limits<double>::quiet_NaN());
    }
    limit.x.push_back(static_cast<double>(p.step));
    limit.y.push_back(cap);
  }
  series.push_back(limit);
  write_text(cfg, "eos.svg",
             svg_line_chart(series, {to_string(ec.optimizer.kind) + " top Hessian eigenvalues", "step", "eigenvalue"}));

  std::cout << std::setprecision(6) << to_string(ec.optimizer.kind) << " alpha " << ec.optimizer.alpha << ": "
            << (res.diverged ? "diverged" : "finished") << ", final lambda_max " << res.final_lambda_max
            << ", filter edge " << cap << ", ratio " << res.saturation_ratio << "\n";
  return res.diverged ? kScientificFailure : kOk;
}

int cmd_scaling(const Overrides& o) {
  Config cfg = load(o);
  ScalingSection s = cfg.scaling.value_or(ScalingSection{});
  if (o.rho) s.rho = *o.rho;
  if (o.beta) s.beta = *o.beta;
  auto out = open_out(cfg, "scaling.csv");
  out << "kind,alpha,lambda_star\n" << std::setprecision(12);
  std::vector<Series> series;
  std::cout << std::setprecision(6);
  for (OptimizerKind kind : s.kinds) {
    const ScalingFit fit = scaling_study(kind, s.rho, s.beta, s.alphas);
    Series line{to_string(kind), {}, {}, false};
    for (const auto& p : fit.points) {
      out << to_string(kind) << ',' << p.alpha << ',' << p.lambda_star << '\n';
      line.x.push_back(std::log10(p.alpha));
      line.y.push_back(std::log10(p.lambda_star));
    }
    series.push_back(line);
    std::cout << to_string(kind) << ": slope " << fit.slope << " (rms residual " << fit.residual << ")\n";
  }
  write_text(cfg, "scaling.svg", svg_line_chart(series, {"filter edge vs step size", "log10 alpha", "log10 lambda*"}));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimizer eigenvalue filters: predictions and empirical checks"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<double> scan_lo, scan_hi;
  std::string bound_kind;
  double b_alpha = 0, b_beta = 0, b_rho = 0;
  int digits = 12;

  auto* derivcheck = app.add_subcommand("derivcheck", "finite-difference check of the configured loss");
  add_common(derivcheck, o);
  derivcheck->add_option("--seed", o.seed, "probe seed");

  auto* bounds = app.add_subcommand("bounds", "print the admissible Hessian eigenvalues for an optimizer");
  bounds->add_option("kind", bound_kind, "optimizer kind")->required();
  bounds->add_option("--alpha", b_alpha, "step size")->required();
  bounds->add_option("--beta", b_beta, "momentum");
  bounds->add_option("--rho", b_rho, "SAM radius");
  bounds->add_option("--digits", digits, "significant digits")->check(CLI::Range(1, 17));

  auto* run_cmd = app.add_subcommand("run", "one optimizer run with a limit check");
  add_common(run_cmd, o);
  add_optimizer_flags(run_cmd, o);
  run_cmd->add_option("--max-iters", o.max_iters, "iteration cap");

  auto* sweep_cmd = app.add_subcommand("sweep", "grid of runs through the worker pool");
  add_common(sweep_cmd, o);
  sweep_cmd->add_option("--seed", o.seed, "master seed");
  sweep_cmd->add_option("--max-iters", o.max_iters, "iteration cap");
  sweep_cmd->add_option("--workers", o.workers, "worker threads (default: EIGFILTER_WORKERS or all cores)");

  auto* scan = app.add_subcommand("scan-fixed-points", "fixed-point set of a 1-D update map");
  add_common(scan, o);
  add_optimizer_flags(scan, o);
  scan->add_option("--lo", scan_lo, "window start");
  scan->add_option("--hi", scan_hi, "window end");

  auto* boundary = app.add_subcommand("boundary", "brute-force stability boundary on 1-D quadratics");
  add_common(boundary, o, false);
  boundary->add_option("--kind", o.kind, "optimizer kind");
  boundary->add_option("--beta", o.beta, "single momentum value");
  boundary->add_option("--rho", o.rho, "SAM radius");
  boundary->add_option("--workers", o.workers, "worker threads");

  auto* eos = app.add_subcommand("eos", "full-batch MLP training with Hessian tracking");
  add_common(eos, o);
  add_optimizer_flags(eos, o);

  auto* scaling = app.add_subcommand("scaling", "log-log slope of the filter edge against the step size");
  add_common(scaling, o, false);
  scaling->add_option("--rho", o.rho, "SAM radius");
  scaling->add_option("--beta", o.beta, "momentum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*derivcheck) return cmd_derivcheck(o);
    if (*bounds) return cmd_bounds(bound_kind, b_alpha, b_beta, b_rho, digits);
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*scan) return cmd_scan(o, scan_lo, scan_hi);
    if (*boundary) return cmd_boundary(o);
    if (*eos) return cmd_eos(o);
    if (*scaling) return cmd_scaling(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kScientificFailure;
  }
  return kUsageError;
}
