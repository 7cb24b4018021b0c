#include <algorithm>
#include <cmath>

#include "eigfilter/harness.hpp"

namespace eigfilter {

ScalingFit scaling_study(OptimizerKind kind, double rho, double beta, const std::vector<double>& alphas) {
  if (alphas.size() < 2) throw PreconditionError("scaling_study: need at least two step sizes");
  const auto [amin, amax] = std::minmax_element(alphas.begin(), alphas.end());
  if (!(*amin > 0.0) || std::log10(*amax / *amin) < 3.0 - 1e-9)
    throw PreconditionError("scaling_study: step sizes must span at least three decades");

  ScalingFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double alpha : alphas) {
    OptimizerSpec spec;
    spec.kind = kind;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.rho = rho;
    const double lambda_star = filter_bound(spec).positive_upper();
    fit.points.push_back({alpha, lambda_star});
    const double lx = std::log(alpha);
    const double ly = std::log(lambda_star);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const auto n = static_cast<double>(alphas.size());
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0;
  for (const auto& p : fit.points) {
    const double r = std::log(p.lambda_star) - (fit.intercept + fit.slope * std::log(p.alpha));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace eigfilter
