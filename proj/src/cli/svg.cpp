#include "eigfilter/svg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace eigfilter::cli {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 480;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void pad(double& lo, double& hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi))) {
    lo = 0;
    hi = 1;
  }
  if (hi - lo < 1e-12 * (1 + std::abs(lo))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double m = 0.05 * (hi - lo);
  lo -= m;
  hi += m;
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& xl, const std::string& yl) {
  const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
  out << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << b + 16 << "\" text-anchor=\"middle\">" << std::setprecision(3)
        << xv << "</text>\n";
    out << "<text x=\"" << l - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  out << std::setprecision(6);
  out << "<text x=\"" << (l + r) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(xl)
      << "</text>\n";
  out << "<text transform=\"translate(16," << (t + b) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(yl) << "</text>\n";
}

void legend(std::ostringstream& out, std::size_t i, const std::string& label, const std::string& colour,
            bool dashed) {
  const double x = kWidth - kRight + 15;
  const double y = kTop + 12 + 18.0 * static_cast<double>(i);
  out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y << "\" stroke=\""
      << colour << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
  out << "<text x=\"" << x + 28 << "\" y=\"" << y + 4 << "\">" << escape(label) << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::vector<Series>& series, const ChartLabels& labels) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  pad(ylo, yhi);
  if (!(xhi > xlo)) pad(xlo, xhi);
  const Frame f{xlo, xhi, ylo, yhi};

  std::ostringstream out;
  out << std::setprecision(6);
  header(out, labels.title);
  axes(out, f, labels.x_label, labels.y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string colour = kPalette[k % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (pts.empty()) return;
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.6\""
          << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      std::ostringstream p;
      p << std::setprecision(6) << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
      pts += p.str();
    }
    flush();
    legend(out, k, s.label, colour, s.dashed);
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_complex_scatter(const ComplexVector& points, const std::string& title) {
  double r = 1.0;
  for (Eigen::Index i = 0; i < points.size(); ++i)
    if (std::isfinite(std::abs(points[i]))) r = std::max(r, std::abs(points[i]));
  r *= 1.1;
  // Square aspect: stretch the real range to the plot width.
  const double aspect = (kWidth - kLeft - kRight) / (kHeight - kTop - kBottom);
  const Frame f{-r * aspect, r * aspect, -r, r};

  std::ostringstream out;
  out << std::setprecision(6);
  header(out, title);
  axes(out, f, "Re", "Im");
  out << "<line x1=\"" << f.px(f.x0) << "\" y1=\"" << f.py(0) << "\" x2=\"" << f.px(f.x1) << "\" y2=\"" << f.py(0)
      << "\" stroke=\"#bbb\"/>\n";
  out << "<line x1=\"" << f.px(0) << "\" y1=\"" << f.py(f.y0) << "\" x2=\"" << f.px(0) << "\" y2=\"" << f.py(f.y1)
      << "\" stroke=\"#bbb\"/>\n";
  out << "<ellipse cx=\"" << f.px(0) << "\" cy=\"" << f.py(0) << "\" rx=\"" << f.px(1) - f.px(0) << "\" ry=\""
      << f.py(0) - f.py(1) << "\" fill=\"none\" stroke=\"#555\" stroke-dasharray=\"5,3\"/>\n";
  for (Eigen::Index i = 0; i < points.size(); ++i) {
    const auto z = points[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
    const bool outside = std::abs(z) > 1.0 + kStabilityTol;
    out << "<circle cx=\"" << f.px(z.real()) << "\" cy=\"" << f.py(z.imag()) << "\" r=\"4\" fill=\""
        << (outside ? "#d62728" : "#1f77b4") << "\"/>\n";
  }
  legend(out, 0, "unit circle", "#555", true);
  out << "</svg>\n";
  return out.str();
}

std::string svg_boundary_heatmap(const BoundaryScan& scan, const std::string& title) {
  const auto& cfg = scan.config;
  const std::size_t nb = cfg.betas.size();
  const std::size_t na = cfg.alpha_lambdas.size();
  if (nb == 0 || na == 0) throw PreconditionError("svg_boundary_heatmap: empty scan");
  const double alo = *std::min_element(cfg.alpha_lambdas.begin(), cfg.alpha_lambdas.end());
  const double ahi = *std::max_element(cfg.alpha_lambdas.begin(), cfg.alpha_lambdas.end());
  const double cell_w = na > 1 ? (ahi - alo) / static_cast<double>(na - 1) : 1.0;
  const Frame f{alo - cell_w / 2, ahi + cell_w / 2, 0.0, static_cast<double>(nb)};

  std::ostringstream out;
  out << std::setprecision(6);
  header(out, title);
  for (const auto& c : scan.cells) {
    const auto row = static_cast<double>(std::find(cfg.betas.begin(), cfg.betas.end(), c.beta) - cfg.betas.begin());
    const std::string fill = c.empirical == RunStatus::Converged ? "#a6d96a" : "#fdae61";
    const double x = f.px(c.alpha_lambda - cell_w / 2);
    const double w = f.px(c.alpha_lambda + cell_w / 2) - x;
    out << "<rect x=\"" << x << "\" y=\"" << f.py(row + 1) << "\" width=\"" << w << "\" height=\""
        << f.py(row) - f.py(row + 1) << "\" fill=\"" << fill << "\"" << (c.agrees() ? "" : " stroke=\"black\"")
        << "/>\n";
  }
  const Frame labels{alo - cell_w / 2, ahi + cell_w / 2, 0.0, 1.0};
  axes(out, labels, "alpha * lambda", "beta row");
  for (std::size_t i = 0; i < nb; ++i) {
    out << "<text x=\"" << kLeft + 4 << "\" y=\"" << f.py(static_cast<double>(i) + 0.5) + 4
        << "\">beta=" << cfg.betas[i] << "</text>\n";
  }

  auto overlay = [&](const std::vector<double>& boundary, const std::string& colour, bool dashed) {
    std::ostringstream pts;
    pts << std::setprecision(6);
    for (std::size_t i = 0; i < std::min(nb, boundary.size()); ++i) {
      const double x = f.px(boundary[i]);
      pts << x << ',' << f.py(static_cast<double>(i)) << ' ' << x << ',' << f.py(static_cast<double>(i) + 1) << ' ';
    }
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2.5\""
        << (dashed ? " stroke-dasharray=\"7,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
  };
  overlay(scan.empirical_boundary, "#1f77b4", false);
  overlay(scan.predicted_boundary, "#d62728", true);
  legend(out, 0, "empirical", "#1f77b4", false);
  legend(out, 1, "predicted", "#d62728", true);
  legend(out, 2, "converged", "#a6d96a", false);
  legend(out, 3, "not converged", "#fdae61", false);
  out << "</svg>\n";
  return out.str();
}

}  // namespace eigfilter::cli
