#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigfilter/harness.hpp"

namespace eigfilter::cli {

/// Config problem with the 1-based line it was found on (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line) : std::runtime_error(format(what, line)), line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
  }
  int line_;
};

struct LossSection {
  std::string id;
  ParamMap params;
};

struct DerivcheckSection {
  std::size_t n_probes = 20;
  double tol = 1e-5;
  double box = 2.0;
  std::uint64_t seed = 0;
};

struct ScanSection {
  FixedPointScanConfig scan;
};

struct BoundarySection {
  OptimizerKind kind = OptimizerKind::GD;
  double rho = 0.0;
  std::vector<double> betas = {0.0};
  double alpha_lambda_lo = 0.05;
  double alpha_lambda_hi = 4.0;
  std::size_t alpha_lambda_n = 80;
  std::size_t iterations = 100000;
  double tolerance = 1e-3;
};

struct EosSection {
  EosConfig eos;
};

struct ScalingSection {
  std::vector<OptimizerKind> kinds = {OptimizerKind::USAM, OptimizerKind::USAM2, OptimizerKind::HSAM};
  double rho = 1.0;
  double beta = 0.0;
  std::vector<double> alphas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
};

struct Config {
  std::optional<LossSection> loss;
  std::optional<OptimizerSpec> optimizer;       // single optimizer (run, scan, eos)
  std::optional<SweepConfig> sweep;             // grid + inits; loss filled from `loss`
  StopCriteria stop;
  std::vector<double> x0;                       // run start point
  std::optional<DerivcheckSection> derivcheck;
  std::optional<ScanSection> scan;
  std::optional<BoundarySection> boundary;
  std::optional<EosSection> eos;
  std::optional<ScalingSection> scaling;
  std::string output_dir = "out";
};

/// Parses and validates a YAML document. Unknown keys, wrong types and values
/// violating module preconditions raise ConfigError with the offending line.
[[nodiscard]] Config parse_config(const std::string& text);
[[nodiscard]] Config load_config(const std::string& path);

}  // namespace eigfilter::cli
