#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace eigfilter {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;

/// Dense Hessians are only assembled up to this many parameters.
inline constexpr std::size_t kDenseHessianCap = 512;

class InvalidSpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a numeric probe (finite differences, eigensolver input)
/// meets a non-finite value. `index` names the offending coordinate or
/// column when known.
class ProbeFailureError : public std::runtime_error {
 public:
  ProbeFailureError(const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), index_(index) {}
  [[nodiscard]] std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

[[nodiscard]] inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Central-difference step used throughout: cbrt(machine epsilon) * (1 + |scale|).
[[nodiscard]] double central_difference_step(double scale);

}  // namespace eigfilter
