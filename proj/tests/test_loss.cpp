#include <doctest.h>

#include <algorithm>
#include <limits>

#include "eigfilter/loss.hpp"
#include "eigfilter/spectral.hpp"
#include "oracles.hpp"

using namespace eigfilter;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::vector<double> sorted_spectrum(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  std::vector<double> v(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(v.begin(), v.end());
  return v;
}

class NanLoss final : public Loss {
 public:
  std::size_t dim() const override { return 3; }
  std::string id() const override { return "nan"; }
  double value(const Vector& x) const override { return x[1] > 0.5 ? std::nan("") : x.squaredNorm(); }
  Vector gradient(const Vector& x) const override {
    Vector g = 2 * x;
    if (x[1] > 0.5) g[1] = std::nan("");
    return g;
  }
};

}  // namespace

TEST_CASE("quadratic: 1-D parabola value and slope") {
  const auto f = make_quadratic({{1.0}, 0, {0.0}});
  CHECK(f->value(vec({2})) == doctest::Approx(2.0));
  CHECK(f->gradient(vec({2}))[0] == doctest::Approx(2.0));
}

TEST_CASE("quadratic: Hessian spectrum survives the rotation") {
  for (std::uint64_t seed : {0u, 1u, 17u, 99u}) {
    const auto f = make_quadratic({{0.1, 10.0}, seed, {}});
    const auto spec = sorted_spectrum(f->hessian(oracle::random_vec(2, seed + 5)));
    CHECK(spec[0] == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(spec[1] == doctest::Approx(10.0).epsilon(1e-10));
  }
  const std::vector<double> eig = {-3, 0.5, 1, 2, 7, 11};
  const auto f = make_quadratic({eig, 42, {1, 2, 3, 4, 5, 6}});
  const auto spec = sorted_spectrum(f->hessian(oracle::random_vec(6, 3, 5.0)));
  for (std::size_t i = 0; i < eig.size(); ++i) CHECK(std::abs(spec[i] - eig[i]) <= 1e-10);
}

TEST_CASE("quadratic: centered minimum has zero gradient") {
  const auto f = make_quadratic({{1, 4, 9}, 3, {0.5, -1, 2}});
  CHECK(f->gradient(vec({0.5, -1, 2})).norm() <= 1e-14);
}

TEST_CASE("quadratic with -4 twice matches the bump Hessian at the origin") {
  const auto q = make_quadratic({{-4, -4}, 0, {0, 0}});
  const auto bump = make_bump_loss({2});
  CHECK((q->hessian(Vector::Zero(2)) - bump->hessian(Vector::Zero(2))).norm() <= 1e-8);
  CHECK((bump->hessian(Vector::Zero(2)) + 4 * Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("bump: origin and outer region") {
  const auto f = make_bump_loss({4});
  CHECK(f->value(Vector::Zero(4)) == doctest::Approx(1.0));
  CHECK(f->gradient(Vector::Zero(4)).norm() == 0.0);
  const Vector x = vec({2, 2, 2, 2});  // norm 4
  CHECK(f->value(x) == doctest::Approx(16.0));
  CHECK((f->gradient(x) - 2 * x).norm() <= 1e-14);
}

TEST_CASE("bump: blend reproduces the endpoint jets") {
  // (t^2 - 1)^2 at t = 2 and t^2 at t = 3, differentiated by hand.
  const RadialProfile a = bump_profile(2.0);
  CHECK(a.value == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(a.first == doctest::Approx(24.0).epsilon(1e-12));
  CHECK(a.second == doctest::Approx(44.0).epsilon(1e-12));
  const RadialProfile b = bump_profile(3.0);
  CHECK(b.value == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(b.first == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(b.second == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("bump: one-sided second derivatives meet at the seams") {
  for (double t : {2.0, 3.0}) {
    const double d = 1e-7;
    const RadialProfile lo = bump_profile(t - d);
    const RadialProfile hi = bump_profile(t + d);
    // Linear extrapolation of each side removes the O(d) drift.
    const RadialProfile lo2 = bump_profile(t - 2 * d);
    const RadialProfile hi2 = bump_profile(t + 2 * d);
    const double left = 2 * lo.second - lo2.second;
    const double right = 2 * hi.second - hi2.second;
    CHECK(std::abs(left - right) <= 1e-8);
  }
}

TEST_CASE("bump: profile derivatives agree with a five-point stencil inside the blend") {
  for (double t : {2.1, 2.5, 2.9}) {
    const RadialProfile p = bump_profile(t);
    CHECK(p.first == doctest::Approx(oracle::deriv5([](double s) { return bump_profile(s).value; }, t)).epsilon(1e-8));
    CHECK(p.second ==
          doctest::Approx(oracle::deriv5([](double s) { return bump_profile(s).first; }, t)).epsilon(1e-8));
  }
}

TEST_CASE("piecewise cubic: flat region, slope and C2 junction") {
  const auto k2 = make_piecewise_cubic({2.0});
  CHECK(k2->value(vec({0.5})) == 0.0);
  CHECK(k2->gradient(vec({0.5}))[0] == 0.0);
  CHECK(k2->gradient(vec({2.0}))[0] == doctest::Approx(-2.0));
  const auto k3 = make_piecewise_cubic({3.0});
  CHECK(k3->gradient(vec({1.0}))[0] == 0.0);
  CHECK(k3->hessian(vec({1.0}))(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("piecewise cubic: slope never positive and continuous at 1") {
  const auto f = make_piecewise_cubic({1.7});
  for (double x = -3; x <= 6; x += 0.01) CHECK(f->gradient(vec({x}))[0] <= 0.0);
  CHECK(std::abs(f->gradient(vec({1 + 1e-9}))[0] - f->gradient(vec({1 - 1e-9}))[0]) <= 1e-15);
}

TEST_CASE("concave quadratic") {
  const auto f1 = make_concave_quadratic(1.0);
  CHECK(f1->value(vec({1})) == doctest::Approx(-1.0));
  CHECK(f1->gradient(vec({1}))[0] == doctest::Approx(-2.0));
  for (double x : {-3.0, 0.0, 5.0}) CHECK(f1->hessian(vec({x}))(0, 0) == doctest::Approx(-2.0));
  CHECK(make_concave_quadratic(2.0)->gradient(vec({0}))[0] == 0.0);
}

TEST_CASE("factories reject bad specs") {
  CHECK_THROWS_AS(make_quadratic({{}, 0, {}}), InvalidSpecError);
  CHECK_THROWS_AS(make_quadratic({{1, 2}, 0, {1}}), InvalidSpecError);
  CHECK_THROWS_AS(make_bump_loss({0}), InvalidSpecError);
  CHECK_THROWS_AS(make_piecewise_cubic({0.0}), InvalidSpecError);
  CHECK_THROWS_AS(make_concave_quadratic(-1.0), InvalidSpecError);
  CHECK_THROWS_AS((void)make_bump_loss({3})->value(Vector::Zero(2)), PreconditionError);
}

TEST_CASE("gradients match finite differences on every catalog loss") {
  std::vector<LossPtr> losses = {
      make_quadratic({{-2, 0.5, 3, 8}, 5, {}}),
      make_bump_loss({3}),
      make_piecewise_cubic({2.0}),
      make_concave_quadratic(0.7),
      make_loss("mlp", {{"layers", std::vector<double>{2, 5, 1}}, {"data_seed", 3.0}}),
      make_loss("mlp", {{"layers", std::vector<double>{2, 4, 3}},
                        {"loss_kind", std::string("cross_entropy")},
                        {"activation", std::string("softplus")}}),
  };
  for (const auto& f : losses) {
    CAPTURE(f->id());
    for (std::uint64_t probe = 0; probe < 100; ++probe) {
      const Vector x = oracle::random_vec(f->dim(), 1000 + probe, 3.5);
      const Vector g = f->gradient(x);
      const Vector fd = oracle::fd_gradient([&](const Vector& y) { return f->value(y); }, x);
      CHECK((fd - g).cwiseAbs().maxCoeff() <= 1e-5 * (1 + g.norm()));
    }
  }
}

TEST_CASE("hvp agrees with the dense Hessian and the Hessian is symmetric") {
  for (const auto& f : {make_quadratic({{1, 2, 3}, 2, {}}), make_bump_loss({3})}) {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Vector x = oracle::random_vec(3, s, 3.0);
      const Vector v = oracle::random_vec(3, s + 50);
      const Matrix h = f->hessian(x);
      CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((f->hvp(x, v) - h * v).norm() <= 1e-8 * (1 + v.norm()));
    }
  }
}

TEST_CASE("check_derivatives") {
  const auto q = make_quadratic({{1, 5, 9}, 1, {}});
  CHECK(check_derivatives(*q, oracle::random_vec(3, 2, 4.0), 1e-6).passed);

  const auto bump = make_bump_loss({4});
  for (std::uint64_t s = 0; s < 10; ++s) {
    Vector x = oracle::random_vec(4, s);
    x *= 2.5 / x.norm();
    CHECK(check_derivatives(*bump, x, 1e-5).passed);
  }

  NanLoss bad;
  Vector x = Vector::Zero(3);
  x[1] = 0.5 - 1e-9;
  try {
    (void)check_derivatives(bad, x, 1e-5);
    FAIL("expected a probe failure");
  } catch (const ProbeFailureError& e) {
    CHECK(e.index() == std::optional<std::size_t>(1));
  }
}

TEST_CASE("catalog by id") {
  CHECK(catalog_ids().size() == 5);
  const auto f = make_loss("quadratic", {{"eigenvalues", std::vector<double>{1, 2}}, {"rotation_seed", 3.0}});
  CHECK(f->dim() == 2);
  CHECK(make_loss("bump", {{"dim", 4.0}})->dim() == 4);
  CHECK_THROWS_AS(make_loss("nope", {}), InvalidSpecError);
  CHECK_THROWS_AS(make_loss("bump", {{"dimension", 4.0}}), InvalidSpecError);
  CHECK_THROWS_AS(make_loss("piecewise_cubic", {{"K", std::string("two")}}), InvalidSpecError);
}
