#pragma once

#include <string>
#include <vector>

#include "eigfilter/stability.hpp"

namespace eigfilter::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Plain polyline chart; non-finite points break the line.
[[nodiscard]] std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels);

/// Eigenvalues in the complex plane with the unit circle drawn for reference.
[[nodiscard]] std::string svg_complex_scatter(const ComplexVector& points, const std::string& title);

/// Convergence map over (alpha * lambda, beta) with the empirical and
/// predicted boundaries overlaid.
[[nodiscard]] std::string svg_boundary_heatmap(const BoundaryScan& scan, const std::string& title);

}  // namespace eigfilter::cli
