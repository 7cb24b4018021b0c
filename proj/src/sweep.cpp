#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>

#include "eigfilter/harness.hpp"
#include "eigfilter/parallel.hpp"

namespace eigfilter {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::uint64_t record_seed(std::uint64_t master_seed, std::size_t run_id) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(run_id) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void SweepSummary::add(const RunRecord& r) {
  ++total;
  switch (r.status) {
    case RunStatus::Converged: ++converged; break;
    case RunStatus::Diverged: ++diverged; break;
    case RunStatus::MaxIter: ++max_iter; break;
  }
  switch (r.bound_verdict) {
    case BoundVerdict::InBounds: ++in_bounds; break;
    case BoundVerdict::OutOfBounds: ++out_of_bounds; break;
    case BoundVerdict::NotApplicable: ++not_applicable; break;
  }
  if (r.update_spectral_radius && *r.update_spectral_radius > 1.0 + kStabilityTol) ++unstable_converged;
}

std::vector<OptimizerSpec> expand_grid(const SweepConfig& cfg) {
  std::vector<OptimizerSpec> grid;
  for (OptimizerKind kind : cfg.kinds) {
    const std::vector<double> betas = kind == OptimizerKind::GD ? std::vector<double>{0.0} : cfg.betas;
    const std::vector<double> rhos = uses_rho(kind) ? cfg.rhos : std::vector<double>{0.0};
    for (double alpha : cfg.alphas)
      for (double beta : betas)
        for (double rho : rhos) {
          OptimizerSpec spec;
          spec.kind = kind;
          spec.alpha = alpha;
          spec.beta = beta;
          spec.rho = rho;
          spec.validate();
          grid.push_back(spec);
        }
  }
  return grid;
}

RunRecord run_and_check(const OptimizerSpec& spec, const Loss& loss, const Vector& x0, const StopCriteria& stop) {
  RunRecord rec;
  rec.spec = spec;
  rec.loss_id = loss.id();
  const RunResult result = run(spec, loss, x0, stop);
  rec.status = result.status;
  rec.iters = result.iters;
  rec.limit_x = result.final_state.x;
  if (result.status == RunStatus::Diverged) {
    rec.grad_norm_at_limit = std::numeric_limits<double>::infinity();
    return rec;
  }
  rec.grad_norm_at_limit = loss.gradient(rec.limit_x).norm();
  if (result.status != RunStatus::Converged) return rec;

  const LimitCheck check = check_limit(spec, loss, result);
  rec.update_spectral_radius = check.report.spectral_radius;
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, check.report.hessian_eigenvalues.size()); ++i)
    rec.hessian_top.push_back(check.report.hessian_eigenvalues[i]);
  rec.bound_verdict = check.verdict;
  if (std::isfinite(check.saturation_ratio)) rec.saturation_ratio = check.saturation_ratio;
  return rec;
}

SweepResult sweep(const SweepConfig& cfg, std::size_t workers) {
  SweepResult out;
  const std::vector<OptimizerSpec> grid = expand_grid(cfg);
  if (grid.empty() || cfg.n_inits == 0) return out;
  const LossPtr loss = make_loss(cfg.loss_id, cfg.loss_params);
  const auto m = static_cast<Eigen::Index>(loss->dim());

  const std::size_t n = grid.size() * cfg.n_inits;
  out.records.resize(n);
  parallel_for(n, workers, [&](std::size_t run_id) {
    const OptimizerSpec& spec = grid[run_id / cfg.n_inits];
    const std::uint64_t seed = record_seed(cfg.master_seed, run_id);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-cfg.init_box, cfg.init_box);
    Vector x0(m);
    for (Eigen::Index i = 0; i < m; ++i) x0[i] = box(rng);
    RunRecord rec = run_and_check(spec, *loss, x0, cfg.stop);
    rec.run_id = run_id;
    rec.x0_seed = seed;
    out.records[run_id] = std::move(rec);
  });
  for (const auto& r : out.records) out.summary.add(r);
  return out;
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << to_string(r.spec.kind) << ',' << fmt(r.spec.alpha) << ',' << fmt(r.spec.effective_beta())
        << ',' << fmt(r.spec.rho) << ',' << r.loss_id << ',' << r.x0_seed << ',' << to_string(r.status) << ','
        << r.iters << ',' << fmt(r.grad_norm_at_limit) << ',' << fmt(r.update_spectral_radius);
    for (std::size_t i = 0; i < 3; ++i) out << ',' << (i < r.hessian_top.size() ? fmt(r.hessian_top[i]) : "");
    out << ',' << to_string(r.bound_verdict) << ',' << fmt(r.saturation_ratio) << '\n';
  }
}

namespace {

std::vector<std::pair<std::string, SweepSummary>> summarize(const std::vector<RunRecord>& records) {
  std::map<std::string, SweepSummary> by_kind;
  std::vector<std::string> order;
  SweepSummary all;
  for (const auto& r : records) {
    const std::string k = to_string(r.spec.kind);
    if (!by_kind.count(k)) order.push_back(k);
    by_kind[k].add(r);
    all.add(r);
  }
  std::vector<std::pair<std::string, SweepSummary>> rows;
  for (const auto& k : order) rows.emplace_back(k, by_kind[k]);
  rows.emplace_back("all", all);
  return rows;
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "kind,total,converged,diverged,max_iter,in_bounds,out_of_bounds,not_applicable,unstable_converged\n";
  for (const auto& [kind, s] : summarize(records)) {
    out << kind << ',' << s.total << ',' << s.converged << ',' << s.diverged << ',' << s.max_iter << ','
        << s.in_bounds << ',' << s.out_of_bounds << ',' << s.not_applicable << ',' << s.unstable_converged << '\n';
  }
}

void print_summary_table(std::ostream& out, const std::vector<RunRecord>& records) {
  const char* cols[] = {"kind", "total", "converged", "diverged", "max_iter", "in_bounds", "out_of_bounds",
                        "n/a", "unstable"};
  for (const char* c : cols) out << std::setw(c == cols[0] ? 6 : 14) << c;
  out << '\n';
  for (const auto& [kind, s] : summarize(records)) {
    out << std::setw(6) << kind;
    for (std::size_t v : {s.total, s.converged, s.diverged, s.max_iter, s.in_bounds, s.out_of_bounds,
                          s.not_applicable, s.unstable_converged})
      out << std::setw(14) << v;
    out << '\n';
  }
}

void write_boundary_csv(std::ostream& out, const BoundaryScan& scan) {
  out << "kind,rho,beta,alpha_lambda,empirical,predicted_stable,agree\n";
  for (const auto& c : scan.cells) {
    out << to_string(scan.config.kind) << ',' << fmt(scan.config.rho) << ',' << fmt(c.beta) << ','
        << fmt(c.alpha_lambda) << ',' << to_string(c.empirical) << ',' << (c.predicted_stable ? 1 : 0) << ','
        << (c.agrees() ? 1 : 0) << '\n';
  }
}

void write_boundary_lines_csv(std::ostream& out, const BoundaryScan& scan) {
  out << "kind,rho,beta,empirical_boundary,predicted_boundary\n";
  for (std::size_t i = 0; i < scan.config.betas.size(); ++i) {
    out << to_string(scan.config.kind) << ',' << fmt(scan.config.rho) << ',' << fmt(scan.config.betas[i]) << ','
        << fmt(scan.empirical_boundary[i]) << ',' << fmt(scan.predicted_boundary[i]) << '\n';
  }
}

void write_spectral_report_csv(std::ostream& out, const SpectralReport& report) {
  out << "series,index,real,imag,modulus\n";
  for (Eigen::Index i = 0; i < report.update_eigenvalues.size(); ++i) {
    const auto& ev = report.update_eigenvalues[i];
    out << "update," << i << ',' << fmt(ev.real()) << ',' << fmt(ev.imag()) << ',' << fmt(std::abs(ev)) << '\n';
  }
  for (Eigen::Index i = 0; i < report.hessian_eigenvalues.size(); ++i) {
    const double v = report.hessian_eigenvalues[i];
    out << "hessian," << i << ',' << fmt(v) << ",0," << fmt(std::abs(v)) << '\n';
  }
}

}  // namespace eigfilter
