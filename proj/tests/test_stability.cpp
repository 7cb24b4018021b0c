#include <doctest.h>

#include "eigfilter/loss.hpp"
#include "eigfilter/spectral.hpp"
#include "eigfilter/stability.hpp"
#include "oracles.hpp"

using namespace eigfilter;

namespace {

OptimizerSpec make(OptimizerKind kind, double alpha, double beta = 0.0, double rho = 0.0) {
  OptimizerSpec s;
  s.kind = kind;
  s.alpha = alpha;
  s.beta = beta;
  s.rho = rho;
  return s;
}

std::vector<std::complex<double>> to_std(const ComplexVector& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("filter values") {
  CHECK(filter_value(OptimizerKind::HeavyBall, 0.3, 2.0) == 2.0);
  CHECK(filter_value(OptimizerKind::USAM, 0.5, 2.0) == doctest::Approx(4.0));
  CHECK(filter_value(OptimizerKind::USAM2, 0.5, 2.0) == doctest::Approx(8.0));
  CHECK(filter_value(OptimizerKind::HSAM, 0.5, 2.0) == doctest::Approx(6.0));
}

TEST_CASE("predicted eigenvalues: worked cases") {
  const auto gd = predicted_update_eigenvalues(make(OptimizerKind::GD, 0.1), 5.0);
  REQUIRE(gd.size() == 1);
  CHECK(gd[0].real() == doctest::Approx(0.5));

  for (double beta : {0.1, 0.5, 0.9}) {
    // At alpha lambda = 2(1 + beta) the quadratic factors as (nu + 1)(nu + beta).
    const auto hb = predicted_update_eigenvalues(make(OptimizerKind::HeavyBall, 1.0, beta), 2 * (1 + beta));
    CHECK(oracle::match_distance(hb, {-1.0, -beta}) <= 1e-14);
    const auto nag = predicted_update_eigenvalues(make(OptimizerKind::NAG, 0.1, beta), 0.0);
    CHECK(oracle::match_distance(nag, {1.0, beta}) <= 1e-14);
  }
}

TEST_CASE("predicted eigenvalues agree with the textbook quadratic formula") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto k : smooth_kinds()) {
    for (int i = 0; i < 200; ++i) {
      const auto spec = make(k, 0.01 + u(rng), 0.95 * u(rng), 0.01 + u(rng));
      const double lambda = -5 + 15 * u(rng);
      const auto ours = predicted_update_eigenvalues(spec, lambda);
      const auto ref = oracle::update_eigs(to_string(k), spec.alpha, spec.effective_beta(), spec.rho, lambda);
      double scale = 1;
      for (const auto& z : ref) scale = std::max(scale, std::abs(z));
      CHECK(oracle::match_distance(ours, ref) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("stable root computation keeps the small root accurate") {
  const auto roots = monic_quadratic_roots(1e8, 1.0);
  double small = std::min(std::abs(roots[0]), std::abs(roots[1]));
  CHECK(small == doctest::Approx(1e-8).epsilon(1e-12));
  const auto pair = monic_quadratic_roots(1.0, 1.0);
  CHECK(pair[0].imag() == doctest::Approx(-pair[1].imag()));
  CHECK(std::abs(pair[0]) == doctest::Approx(1.0));
}

TEST_CASE("filter bounds: GD and USAM closed forms") {
  const FilterBound gd = filter_bound(make(OptimizerKind::GD, 0.01));
  REQUIRE(gd.intervals.size() == 1);
  CHECK(gd.intervals[0].lo == 0.0);
  CHECK(gd.intervals[0].hi == doctest::Approx(200.0).epsilon(1e-15));
  CHECK(format_intervals(gd) == "[0, 200]");

  const FilterBound usam = filter_bound(make(OptimizerKind::USAM, 0.1, 0.0, 0.1));
  REQUIRE(usam.intervals.size() == 2);
  // sqrt(1 + 8 rho / alpha) = 3, endpoints (-1 +- 3) / (2 rho).
  CHECK(usam.intervals[0].lo == -20.0);
  CHECK(usam.intervals[0].hi == -10.0);
  CHECK(usam.intervals[1].lo == 0.0);
  CHECK(usam.intervals[1].hi == 10.0);
  CHECK(usam.mu(10.0) == doctest::Approx(2.0 / 0.1));
  CHECK(format_intervals(usam) == "[-20, -10] ∪ [0, 10]");

  const FilterBound nag = filter_bound(make(OptimizerKind::NAG, 0.1, 0.9));
  CHECK(nag.positive_upper() == doctest::Approx((2 + 1.8) / (1 + 1.8) / 0.1).epsilon(1e-14));
  CHECK_THROWS_AS(filter_bound(make(OptimizerKind::SAMExperimental, 0.1, 0, 0.1)), UnsupportedKindError);
}

TEST_CASE("filter bounds: USAM2 and HSAM endpoints match a Newton oracle") {
  const double alpha = 0.1, rho = 0.1;
  const FilterBound u2 = filter_bound(make(OptimizerKind::USAM2, alpha, 0.0, rho));
  REQUIRE(u2.intervals.size() == 1);
  const double ref2 = oracle::newton_root([&](double l) { return l * (1 + rho * l) * (1 + rho * l); }, 2 / alpha, 20);
  CHECK(u2.positive_upper() == doctest::Approx(ref2).epsilon(1e-13));
  CHECK(u2.positive_upper() < 10.0);
  CHECK(format_intervals(u2) == "[0, 6.9562076956]");

  const FilterBound h = filter_bound(make(OptimizerKind::HSAM, alpha, 0.0, rho));
  const double refh = oracle::newton_root([&](double l) { return l * (1 + rho * l * l); }, 2 / alpha, 20);
  CHECK(h.positive_upper() == doctest::Approx(refh).epsilon(1e-13));
}

TEST_CASE("boundary exactness: predicted modulus is one at alpha mu = 2(1 + beta)") {
  for (auto k : {OptimizerKind::GD, OptimizerKind::HeavyBall, OptimizerKind::USAM, OptimizerKind::USAM2,
                 OptimizerKind::HSAM}) {
    for (double beta : {0.0, 0.3, 0.8}) {
      const auto spec = make(k, 0.05, beta, 0.2);
      const double edge = filter_bound(spec).positive_upper();
      double modulus = 0;
      for (const auto& z : predicted_update_eigenvalues(spec, edge)) modulus = std::max(modulus, std::abs(z));
      CHECK(std::abs(modulus - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("filter nesting and strict-saddle exclusion") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double alpha = std::pow(10.0, -4 * u(rng));
    const double beta = 0.95 * u(rng);
    const double rho = std::pow(10.0, -2 + 2 * u(rng));
    const double hb = filter_bound(make(OptimizerKind::HeavyBall, alpha, beta)).positive_upper();
    const FilterBound usam = filter_bound(make(OptimizerKind::USAM, alpha, beta, rho));
    const FilterBound usam2 = filter_bound(make(OptimizerKind::USAM2, alpha, beta, rho));
    const FilterBound hsam = filter_bound(make(OptimizerKind::HSAM, alpha, beta, rho));
    CHECK(usam2.positive_upper() < usam.positive_upper());
    CHECK(usam.positive_upper() < hb);
    CHECK(hb == doctest::Approx(2 * (1 + beta) / alpha));
    // HSAM is inside USAM exactly when the USAM endpoint is at least 1.
    if (usam.positive_upper() >= 1.0) CHECK(hsam.positive_upper() <= usam.positive_upper());
    else CHECK(hsam.positive_upper() > usam.positive_upper());
    for (const auto& iv : usam2.intervals) CHECK(iv.lo >= 0.0);
    for (const auto& iv : hsam.intervals) CHECK(iv.lo >= 0.0);
    CHECK(usam.intervals.front().lo < 0.0);
  }
}

TEST_CASE("update Jacobian at the bump origin") {
  const auto f = make_bump_loss({3});
  for (double alpha : {0.1, 0.5, 1.3}) {
    const auto spec = make(OptimizerKind::GD, alpha);
    const AugmentedState s = AugmentedState::at(Vector::Zero(3));
    for (auto mode : {JacobianMode::Numeric, JacobianMode::AnalyticAtCritical}) {
      const Matrix j = update_jacobian(spec, *f, s, mode);
      CHECK((j - (1 + 4 * alpha) * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(spectral_radius(dense_eigenvalues(j)) == doctest::Approx(1 + 4 * alpha).epsilon(1e-10));
    }
  }
}

TEST_CASE("numeric and analytic Jacobians agree at a quadratic's center") {
  const auto f = make_quadratic({{-1, 0.3, 2, 5}, 17, {1, 0, -1, 2}});
  Vector c(4);
  c << 1, 0, -1, 2;
  for (auto k : smooth_kinds()) {
    const auto spec = make(k, 0.07, 0.6, 0.3);
    const AugmentedState s = AugmentedState::at(c);
    const Matrix jn = update_jacobian(spec, *f, s, JacobianMode::Numeric);
    const Matrix ja = update_jacobian(spec, *f, s, JacobianMode::AnalyticAtCritical);
    CHECK((jn - ja).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK_THROWS_AS(update_jacobian(make(OptimizerKind::GD, 0.1), *f, AugmentedState::at(Vector::Zero(4)),
                                  JacobianMode::AnalyticAtCritical),
                  PreconditionError);
}

TEST_CASE("USAM Jacobian eigenvalue at a critical point is 1 - alpha lambda (1 + rho lambda)") {
  for (double lambda : {-15.0, -5.0, 0.5, 3.0}) {
    const auto f = make_quadratic({{lambda}, 0, {}});
    const auto spec = make(OptimizerKind::USAM, 0.1, 0.0, 0.1);
    const Matrix j = update_jacobian(spec, *f, AugmentedState::at(Vector::Zero(1)), JacobianMode::Numeric);
    CHECK(j(0, 0) == doctest::Approx(1 - 0.1 * lambda * (1 + 0.1 * lambda)).epsilon(1e-9));
  }
}

TEST_CASE("block reduction matches the dense Jacobian spectrum for momentum kinds") {
  const std::vector<double> eig = {-0.5, 0.4, 1.5, 3};
  const auto f = make_quadratic({eig, 2, {}});
  Vector lam(4);
  lam << 3, 1.5, 0.4, -0.5;
  for (auto k : smooth_kinds()) {
    const auto spec = make(k, 0.1, 0.7, 0.2);
    const Matrix j = update_jacobian(spec, *f, AugmentedState::at(Vector::Zero(4)), JacobianMode::Numeric);
    const auto blocks = to_std(block_reduced_eigenvalues(spec, lam));
    CHECK(spectrum_mismatch(to_std(dense_eigenvalues(j)), blocks) <= 1e-6);
  }
}

TEST_CASE("check_limit verdicts") {
  const auto f = make_quadratic({{0.5, 19}, 1, {}});
  const auto gd = make(OptimizerKind::GD, 0.1);
  const RunResult r = run(gd, *f, oracle::random_vec(2, 1));
  REQUIRE(r.status == RunStatus::Converged);
  const LimitCheck c = check_limit(gd, *f, r);
  CHECK(c.verdict == BoundVerdict::InBounds);
  CHECK(c.report.stable);
  CHECK(c.report.spectral_radius == doctest::Approx(0.95).epsilon(1e-6));
  CHECK(c.saturation_ratio == doctest::Approx(19.0 / 20.0).epsilon(1e-9));

  // Spurious fixed point of USAM: gradient is nonzero, so no verdict.
  const auto cubic = make_piecewise_cubic({2.0});
  const auto usam = make(OptimizerKind::USAM, 0.1, 0.0, 1.0);
  const RunResult rs = run(usam, *cubic, Vector::Constant(1, 3.0));
  REQUIRE(rs.status == RunStatus::Converged);
  const LimitCheck cs = check_limit(usam, *cubic, rs);
  CHECK(cs.verdict == BoundVerdict::NotApplicable);
  CHECK(cs.report.update_eigenvalues.size() == 1);

  // A "converged" record at an unstable point surfaces as unstable.
  const auto steep = make_quadratic({{25.0}, 0, {}});
  RunResult fake;
  fake.status = RunStatus::Converged;
  fake.final_state = AugmentedState::at(Vector::Zero(1));
  const LimitCheck cu = check_limit(gd, *steep, fake);
  CHECK(cu.report.spectral_radius == doctest::Approx(1.5).epsilon(1e-9));
  CHECK_FALSE(cu.report.stable);
  CHECK(cu.verdict == BoundVerdict::OutOfBounds);

  RunResult not_done;
  CHECK_THROWS_AS(check_limit(gd, *f, not_done), PreconditionError);
}

TEST_CASE("spectrum mismatch") {
  using C = std::complex<double>;
  CHECK(spectrum_mismatch({C(1, 0), C(0, 1)}, {C(0, 1), C(1, 0)}) == 0.0);
  CHECK(spectrum_mismatch({C(1, 0)}, {C(1, 0), C(2, 0)}) == INFINITY);
  CHECK(spectrum_mismatch({C(0, 1), C(0, -1)}, {C(0, -1.1), C(0, 1.1)}) == doctest::Approx(0.1));
}

TEST_CASE("brute-force boundaries against an independent scalar iteration") {
  struct Case {
    OptimizerKind kind;
    double beta;
    double predicted;
  };
  const std::vector<Case> cases = {
      {OptimizerKind::GD, 0.0, 2.0},
      {OptimizerKind::HeavyBall, 0.5, 3.0},
      {OptimizerKind::NAG, 0.9, 3.8 / 2.8},
  };
  for (const auto& c : cases) {
    const double emp = empirical_boundary(c.kind, c.beta, 0.0, 20000);
    CHECK(std::abs(emp - c.predicted) <= 2e-3);
    CHECK(predicted_boundary(c.kind, c.beta, 0.0) == doctest::Approx(c.predicted).epsilon(1e-9));
    const std::string name = to_string(c.kind);
    CHECK(oracle::scalar_converges(name, c.predicted - 0.01, c.beta, 20000));
    CHECK_FALSE(oracle::scalar_converges(name, c.predicted + 0.01, c.beta, 20000));
    CHECK((boundary_probe(c.kind, c.beta, 0.0, c.predicted - 0.01, 20000) == RunStatus::Converged));
    CHECK((boundary_probe(c.kind, c.beta, 0.0, c.predicted + 0.01, 20000) != RunStatus::Converged));
  }
}

TEST_CASE("boundary scan grid") {
  BoundaryScanConfig cfg;
  cfg.kind = OptimizerKind::HeavyBall;
  cfg.betas = {0.0, 0.5};
  for (int i = 1; i <= 20; ++i) cfg.alpha_lambdas.push_back(0.2 * i);
  cfg.iterations = 20000;
  const BoundaryScan scan = stability_boundary_scan(cfg, 2);
  CHECK(scan.cells.size() == 40);
  CHECK(scan.predicted_boundary[1] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::abs(scan.empirical_boundary[1] - 3.0) <= 2e-3);
  // Cells sitting exactly on the boundary may go either way.
  std::size_t off_edge = 0, agree = 0;
  for (const auto& c : scan.cells) {
    if (std::abs(c.alpha_lambda - 2 * (1 + c.beta)) < 1e-9) continue;
    ++off_edge;
    if (c.agrees()) ++agree;
  }
  CHECK(agree == off_edge);
}
