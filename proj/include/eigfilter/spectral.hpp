#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "eigfilter/loss.hpp"

namespace eigfilter {

/// Full complex spectrum of a square real matrix (n <= 1200).
/// Throws ProbeFailureError on non-finite entries.
[[nodiscard]] ComplexVector dense_eigenvalues(const Matrix& a);

/// Real spectrum of a symmetric matrix, sorted descending. Inputs are
/// symmetrized; asymmetry above 1e-8 * (1 + |A|) is rejected.
[[nodiscard]] Vector symmetric_eigenvalues(const Matrix& a);

[[nodiscard]] double spectral_radius(const ComplexVector& eigenvalues);

struct TopSpectrum {
  Vector values;     // descending algebraic order
  Vector residuals;  // |H v - lambda v| per Ritz pair
  bool converged = false;
  std::size_t iterations = 0;
};

/// Lanczos on the Hessian-vector product at x with full reorthogonalization.
/// Requires k <= min(dim, 32). The start vector is drawn from `seed`.
[[nodiscard]] TopSpectrum top_hessian_eigenvalues(const Loss& loss, const Vector& x, std::size_t k,
                                                  double tol = 1e-8, std::size_t max_iters = 300,
                                                  std::uint64_t seed = 0);

using VectorMap = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian, column j probed with h_j = cbrt(eps)(1 + |s_j|).
/// Throws ProbeFailureError naming the column on a non-finite probe.
[[nodiscard]] Matrix numeric_jacobian(const VectorMap& map, const Vector& s);

}  // namespace eigfilter
