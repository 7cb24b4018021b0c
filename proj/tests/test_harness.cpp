#include <doctest.h>

#include <sstream>

#include "eigfilter/harness.hpp"
#include "oracles.hpp"

using namespace eigfilter;

namespace {

SweepConfig ten_level_quadratic(std::vector<double> alphas, std::size_t inits) {
  SweepConfig cfg;
  cfg.loss_id = "quadratic";
  cfg.loss_params = {{"eigenvalues", std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}, {"rotation_seed", 5.0}};
  cfg.kinds = {OptimizerKind::GD};
  cfg.alphas = std::move(alphas);
  cfg.n_inits = inits;
  cfg.init_box = 3.0;
  cfg.master_seed = 77;
  cfg.stop.max_iters = 20000;
  return cfg;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream out;
  write_records_csv(out, r.records);
  return out.str();
}

OptimizerSpec usam(double alpha, double rho) {
  OptimizerSpec s;
  s.kind = OptimizerKind::USAM;
  s.alpha = alpha;
  s.rho = rho;
  return s;
}

}  // namespace

TEST_CASE("grid expansion order and GD beta collapse") {
  SweepConfig cfg;
  cfg.kinds = {OptimizerKind::GD, OptimizerKind::HeavyBall};
  cfg.alphas = {0.1, 0.2};
  cfg.betas = {0.3, 0.6};
  cfg.n_inits = 2;
  const auto grid = expand_grid(cfg);
  // GD ignores beta: 2 alphas; HB: 2 alphas x 2 betas. Inits are expanded by sweep.
  CHECK(grid.size() == 2 + 4);
  CHECK(grid[0].kind == OptimizerKind::GD);
  CHECK(grid[2].kind == OptimizerKind::HeavyBall);
  CHECK(grid[2].alpha == 0.1);
  CHECK(grid[2].beta == 0.3);
  CHECK(grid[3].beta == 0.6);
  CHECK(grid[4].alpha == 0.2);
}

TEST_CASE("record seeds depend only on master seed and run id") {
  CHECK(record_seed(1, 5) == record_seed(1, 5));
  CHECK(record_seed(1, 5) != record_seed(1, 6));
  CHECK(record_seed(1, 5) != record_seed(2, 5));
}

TEST_CASE("sweep: all converged GD runs are in bounds when the whole spectrum is admissible") {
  const SweepResult r = sweep(ten_level_quadratic({0.05, 0.1, 0.19}, 50), 4);
  CHECK(r.summary.total == 150);
  CHECK(r.summary.converged == 150);
  CHECK(r.summary.in_bounds == 150);
  CHECK(r.summary.unstable_converged == 0);
  for (const auto& rec : r.records) {
    REQUIRE(rec.hessian_top.size() == 3);
    CHECK(rec.hessian_top[0] == doctest::Approx(10.0).epsilon(1e-8));
  }
}

TEST_CASE("sweep: alpha 0.3 filters the ten-level minimum") {
  const SweepResult r = sweep(ten_level_quadratic({0.3}, 50), 4);
  CHECK(r.summary.total == 50);
  for (const auto& rec : r.records) {
    if (rec.status != RunStatus::Converged) continue;
    CHECK(rec.hessian_top[0] <= 2 / 0.3 + 1e-6);
  }
  CHECK(r.summary.converged == 0);
}

TEST_CASE("sweep: empty grid") {
  SweepConfig cfg = ten_level_quadratic({}, 3);
  const SweepResult r = sweep(cfg, 2);
  CHECK(r.records.empty());
  CHECK(r.summary.total == 0);
  std::ostringstream out;
  write_summary_csv(out, r.records);
  CHECK(out.str().find("all") != std::string::npos);
}

TEST_CASE("sweep output is byte-identical across worker counts") {
  SweepConfig cfg;
  cfg.loss_id = "bump";
  cfg.loss_params = {{"dim", 3.0}};
  cfg.kinds = {OptimizerKind::GD, OptimizerKind::HeavyBall, OptimizerKind::USAM};
  cfg.alphas = {0.02, 0.07};
  cfg.betas = {0.5};
  cfg.rhos = {0.05};
  cfg.n_inits = 5;
  cfg.init_box = 3.0;
  cfg.master_seed = 99;
  const std::string a = csv_of(sweep(cfg, 1));
  const std::string b = csv_of(sweep(cfg, 4));
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) == kRecordCsvHeader);
}

TEST_CASE("records CSV leaves missing fields empty") {
  RunRecord rec;
  rec.loss_id = "quadratic";
  rec.status = RunStatus::Diverged;
  std::ostringstream out;
  write_records_csv(out, {rec});
  const std::string row = out.str().substr(out.str().find('\n') + 1);
  CHECK(row.find("Diverged") != std::string::npos);
  CHECK(row.find(",,,,") != std::string::npos);
}

TEST_CASE("fixed-point scan: USAM on the piecewise cubic") {
  for (double rho : {0.5, 1.0, 2.0}) {
    for (double K : {0.5, 1.0, 2.0}) {
      const auto f = make_piecewise_cubic({K});
      FixedPointScanConfig cfg;
      cfg.lo = -2;
      cfg.hi = 1 + 1 / (rho * K) + 3;
      const auto iv = fixed_point_scan_1d(usam(0.1, rho), *f, cfg);
      REQUIRE(iv.size() == 2);
      CHECK(iv[0].lo == cfg.lo);
      CHECK(std::abs(iv[0].hi - 1.0) <= 1e-4);
      CHECK(std::abs(iv[1].lo - (1 + 1 / (rho * K))) <= 1e-4);
      CHECK(iv[1].hi == cfg.hi);
    }
  }
  const auto f = make_piecewise_cubic({2.0});
  const auto iv = fixed_point_scan_1d(usam(0.1, 1.0), *f);
  REQUIRE(iv.size() == 2);
  CHECK(std::abs(iv[1].lo - 1.5) <= 1e-10);
  CHECK(std::abs(iv[0].hi - 1.0) <= 1e-10);
  CHECK(format_fixed_point_set(iv, -2, 5) == "(-inf,1] ∪ [1.5, +inf) (window-clipped)");

  const auto iv3 = fixed_point_scan_1d(usam(0.1, 0.5), *make_piecewise_cubic({1.0}));
  REQUIRE(iv3.size() == 2);
  CHECK(iv3[1].lo == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("fixed-point scan: GD only keeps critical points") {
  OptimizerSpec gd;
  gd.alpha = 0.1;
  const auto iv = fixed_point_scan_1d(gd, *make_piecewise_cubic({2.0}));
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].lo == -2.0);
  CHECK(std::abs(iv[0].hi - 1.0) <= 1e-10);
}

TEST_CASE("scaling slopes") {
  const std::vector<double> alphas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  CHECK(scaling_study(OptimizerKind::GD, 0.0, 0.0, alphas).slope == doctest::Approx(-1.0).epsilon(1e-12));
  for (double rho : {0.1, 1.0}) {
    CHECK(std::abs(scaling_study(OptimizerKind::USAM, rho, 0.0, alphas).slope + 0.5) <= 0.05);
    CHECK(std::abs(scaling_study(OptimizerKind::HSAM, rho, 0.0, alphas).slope + 1.0 / 3.0) <= 0.05);
  }
  CHECK(std::abs(scaling_study(OptimizerKind::USAM2, 1.0, 0.0, alphas).slope + 1.0 / 3.0) <= 0.05);

  // At rho = 0.1 the USAM2 endpoints for alpha >= 1e-3 have not reached the
  // small-alpha regime yet. Independent fit from Newton roots of
  // lambda (1 + rho lambda)^2 = 2 / alpha gives the same pre-asymptotic slope.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double a : alphas) {
    const double l = oracle::newton_root([](double x) { return x * (1 + 0.1 * x) * (1 + 0.1 * x); }, 2 / a, 1e4);
    sx += std::log(a);
    sy += std::log(l);
    sxx += std::log(a) * std::log(a);
    sxy += std::log(a) * std::log(l);
  }
  const double ref = (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
  const double slope = scaling_study(OptimizerKind::USAM2, 0.1, 0.0, alphas).slope;
  CHECK(slope == doctest::Approx(ref).epsilon(1e-9));
  CHECK(slope == doctest::Approx(-0.392).epsilon(0.01));

  CHECK_THROWS_AS(scaling_study(OptimizerKind::USAM, 1.0, 0.0, {1e-1, 1e-2}), PreconditionError);
}

TEST_CASE("EOS: tiny step never approaches the edge") {
  EosConfig cfg;
  cfg.mlp = {{2, 8, 1}};
  cfg.data.seed = 1;
  cfg.init_seed = 2;
  cfg.optimizer.alpha = 0.005;
  cfg.epochs = 300;
  cfg.probe_every = 100;
  const EosResult r = eos_experiment(cfg);
  CHECK_FALSE(r.diverged);
  CHECK(r.series.size() == 4);
  CHECK(r.series.front().step == 0);
  CHECK(r.series.back().step == 300);
  CHECK(r.saturation_ratio < 0.5);
  std::ostringstream out;
  write_eos_csv(out, r);
  CHECK(out.str().rfind("step,loss,lam1", 0) == 0);
}
