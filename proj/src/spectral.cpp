#include "eigfilter/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace eigfilter {
namespace {

void require_square_finite(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw ProbeFailureError(std::string(who) + ": matrix is not square");
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (!a.col(j).allFinite()) {
      throw ProbeFailureError(std::string(who) + ": non-finite entry in column " + std::to_string(j),
                              static_cast<std::size_t>(j));
    }
  }
}

}  // namespace

ComplexVector dense_eigenvalues(const Matrix& a) {
  require_square_finite(a, "dense_eigenvalues");
  if (a.rows() > 1200) throw ProbeFailureError("dense_eigenvalues: matrix larger than 1200");
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw ProbeFailureError("dense_eigenvalues: QR iteration did not converge");
  return solver.eigenvalues();
}

Vector symmetric_eigenvalues(const Matrix& a) {
  require_square_finite(a, "symmetric_eigenvalues");
  if (a.rows() == 0) return {};
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * (1.0 + a.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "symmetric_eigenvalues: asymmetry " << asym << " exceeds guard";
    throw PreconditionError(msg.str());
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ProbeFailureError("symmetric_eigenvalues: solver failed");
  return solver.eigenvalues().reverse();
}

double spectral_radius(const ComplexVector& eigenvalues) {
  double r = 0.0;
  for (const auto& ev : eigenvalues) r = std::max(r, std::abs(ev));
  return r;
}

TopSpectrum top_hessian_eigenvalues(const Loss& loss, const Vector& x, std::size_t k, double tol,
                                    std::size_t max_iters, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(loss.dim());
  if (k == 0 || k > std::min<std::size_t>(loss.dim(), 32))
    throw std::invalid_argument("top_hessian_eigenvalues: k must lie in [1, min(dim, 32)]");
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::Index budget = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::max(max_iters, k)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_unit_orthogonal_to = [&](const Matrix& basis, Eigen::Index used) -> Vector {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Vector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
      for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
      }
      const double nv = v.norm();
      if (nv > 1e-8) return v / nv;
    }
    return Vector::Zero(n);
  };

  Matrix q(n, budget);
  Vector alpha = Vector::Zero(budget);
  Vector beta = Vector::Zero(budget);  // beta[j] couples q_j and q_{j+1}
  q.col(0) = random_unit_orthogonal_to(q, 0);

  TopSpectrum out;
  Eigen::SelfAdjointEigenSolver<Matrix> ritz;
  Eigen::Index size = 0;
  for (Eigen::Index j = 0; j < budget; ++j) {
    Vector w = loss.hvp(x, q.col(j));
    if (!w.allFinite()) throw ProbeFailureError("top_hessian_eigenvalues: non-finite Hessian-vector product");
    alpha[j] = q.col(j).dot(w);
    w -= alpha[j] * q.col(j);
    if (j > 0) w -= beta[j - 1] * q.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
    const double b = w.norm();
    size = j + 1;

    Matrix t = Matrix::Zero(size, size);
    t.diagonal() = alpha.head(size);
    for (Eigen::Index i = 0; i + 1 < size; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    ritz.compute(t);

    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    const bool invariant = b <= 1e-10 * scale;
    bool estimates_ok = size >= kk;
    for (Eigen::Index i = 0; estimates_ok && i < kk; ++i) {
      const Eigen::Index col = size - 1 - i;
      estimates_ok = std::abs(b * ritz.eigenvectors()(size - 1, col)) <= 0.1 * tol;
    }
    if (size == budget || (estimates_ok && (invariant || size >= kk))) break;
    if (invariant) {
      // Exhausted a Krylov subspace; continue from a fresh orthogonal direction.
      beta[j] = 0.0;
      const Vector fresh = random_unit_orthogonal_to(q, size);
      if (fresh.isZero()) break;
      q.col(j + 1) = fresh;
    } else {
      beta[j] = b;
      q.col(j + 1) = w / b;
    }
  }

  const Eigen::Index got = std::min(kk, size);
  out.values.resize(got);
  out.residuals.resize(got);
  for (Eigen::Index i = 0; i < got; ++i) {
    const Eigen::Index col = size - 1 - i;
    const double theta = ritz.eigenvalues()[col];
    Vector v = q.leftCols(size) * ritz.eigenvectors().col(col);
    v.normalize();
    out.values[i] = theta;
    out.residuals[i] = (loss.hvp(x, v) - theta * v).norm();
  }
  out.iterations = static_cast<std::size_t>(size);
  out.converged = got == kk && (out.residuals.array() <= tol).all();
  return out;
}

Matrix numeric_jacobian(const VectorMap& map, const Vector& s) {
  const Vector base = map(s);
  const auto rows = base.size();
  const auto cols = s.size();
  Matrix jac(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double h = central_difference_step(s[j]);
    Vector sp = s;
    Vector sm = s;
    sp[j] += h;
    sm[j] -= h;
    Vector fp, fm;
    try {
      fp = map(sp);
      fm = map(sm);
    } catch (const std::runtime_error& e) {
      throw ProbeFailureError("numeric_jacobian: probe failed in column " + std::to_string(j) + ": " + e.what(),
                              static_cast<std::size_t>(j));
    }
    if (!fp.allFinite() || !fm.allFinite()) {
      throw ProbeFailureError("numeric_jacobian: non-finite probe in column " + std::to_string(j),
                              static_cast<std::size_t>(j));
    }
    jac.col(j) = (fp - fm) / (sp[j] - sm[j]);
  }
  return jac;
}

}  // namespace eigfilter
