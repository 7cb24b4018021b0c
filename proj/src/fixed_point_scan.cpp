#include <cmath>
#include <iomanip>
#include <sstream>

#include "eigfilter/harness.hpp"

namespace eigfilter {
namespace {

AugmentedState point(double x) { return AugmentedState::at(Vector::Constant(1, x)); }

bool grid_fixed(const OptimizerSpec& spec, const Loss& loss, double x, double tol) {
  try {
    const AugmentedState s = point(x);
    const AugmentedState next = step(spec, loss, s);
    return std::hypot((next.x - s.x)[0], (next.y - s.y)[0]) <= tol;
  } catch (const DivergenceError&) {
    return false;
  }
}

// The residual of step is alpha * |g| rounded against x; near a tangential
// endpoint it underflows long before g does, so refinement tests g directly.
bool query_vanishes(const OptimizerSpec& spec, const Loss& loss, double x, double tol) {
  try {
    return gradient_query(spec, loss, point(x)).norm() <= tol;
  } catch (const DivergenceError&) {
    return false;
  }
}

// fixed_end satisfies the predicate, free_end does not.
double refine(const OptimizerSpec& spec, const Loss& loss, double fixed_end, double free_end,
              const FixedPointScanConfig& cfg) {
  if (!query_vanishes(spec, loss, fixed_end, cfg.refine_tol) || query_vanishes(spec, loss, free_end, cfg.refine_tol))
    return fixed_end;
  while (std::abs(free_end - fixed_end) > cfg.endpoint_resolution) {
    const double mid = 0.5 * (fixed_end + free_end);
    if (mid == fixed_end || mid == free_end) break;
    (query_vanishes(spec, loss, mid, cfg.refine_tol) ? fixed_end : free_end) = mid;
  }
  return fixed_end;
}

}  // namespace

std::vector<Interval> fixed_point_scan_1d(const OptimizerSpec& spec, const Loss& loss, const FixedPointScanConfig& cfg) {
  if (loss.dim() != 1) throw PreconditionError("fixed_point_scan_1d: loss must be one-dimensional");
  if (cfg.n_grid < 2 || !(cfg.hi > cfg.lo)) throw std::invalid_argument("fixed_point_scan_1d: bad window");
  spec.validate();
  const double h = (cfg.hi - cfg.lo) / static_cast<double>(cfg.n_grid - 1);
  auto grid_x = [&](std::size_t i) { return i + 1 == cfg.n_grid ? cfg.hi : cfg.lo + h * static_cast<double>(i); };

  std::vector<bool> fixed(cfg.n_grid);
  for (std::size_t i = 0; i < cfg.n_grid; ++i) fixed[i] = grid_fixed(spec, loss, grid_x(i), cfg.grid_tol);

  std::vector<Interval> out;
  std::size_t i = 0;
  while (i < cfg.n_grid) {
    if (!fixed[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < cfg.n_grid && fixed[j + 1]) ++j;
    Interval iv{grid_x(i), grid_x(j)};
    if (i > 0) iv.lo = refine(spec, loss, grid_x(i), grid_x(i - 1), cfg);
    if (j + 1 < cfg.n_grid) iv.hi = refine(spec, loss, grid_x(j), grid_x(j + 1), cfg);
    out.push_back(iv);
    i = j + 1;
  }
  return out;
}

std::string format_fixed_point_set(const std::vector<Interval>& intervals, double lo, double hi, int digits) {
  if (intervals.empty()) return "(empty)";
  std::ostringstream out;
  out << std::setprecision(digits);
  bool clipped = false;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    if (k > 0) out << " ∪ ";
    const bool open_left = intervals[k].lo <= lo;
    const bool open_right = intervals[k].hi >= hi;
    clipped = clipped || open_left || open_right;
    if (open_left && open_right) {
      out << "(-inf, +inf)";
    } else if (open_left) {
      out << "(-inf," << intervals[k].hi << ']';
    } else if (open_right) {
      out << '[' << intervals[k].lo << ", +inf)";
    } else {
      out << '[' << intervals[k].lo << ", " << intervals[k].hi << ']';
    }
  }
  if (clipped) out << " (window-clipped)";
  return out.str();
}

}  // namespace eigfilter
