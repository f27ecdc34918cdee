#include "flyer/grid.hpp"

#include <algorithm>
#include <cmath>

namespace flyer {

void GridSpec::validate() const {
  if (nx < 4 || ny < 4) throw ParameterError("grid must be at least 4x4");
  if (!(xmax > xmin) || !(ymax > ymin)) throw ParameterError("grid extents are empty");
  if (!(stretch_ratio >= 1.0)) throw ParameterError("stretch_ratio must be >= 1");
  if (cluster_x < xmin || cluster_x > xmax || cluster_y < ymin || cluster_y > ymax) {
    throw ParameterError("cluster center must lie inside the domain");
  }
}

namespace {

// Interior-point clustering: xi in [0,1] -> x in [x0,x1], concentrating
// points around xr = (xcl - x0)/L.  beta = 0 reduces to the identity map.
double sinh_map(double xi, double beta, double r) {
  if (beta <= 0.0) return xi;
  const double B =
      0.5 / beta * std::log((1.0 + (std::exp(beta) - 1.0) * r) / (1.0 + (std::exp(-beta) - 1.0) * r));
  return r * (1.0 + std::sinh(beta * (xi - B)) / std::sinh(beta * B));
}

Eigen::ArrayXd build_faces(int n, double x0, double x1, double xcl, double ratio) {
  Eigen::ArrayXd f(n + 1);
  const double L = x1 - x0;
  const double r = std::clamp((xcl - x0) / L, 1e-6, 1.0 - 1e-6);
  double beta = 0.0;
  if (ratio > 1.0) {
    // bisect beta so that max(dx)/min(dx) hits the requested ratio
    double lo = 1e-3, hi = 20.0;
    auto ratio_of = [&](double b) {
      double dmin = 2.0, dmax = 0.0;
      double prev = sinh_map(0.0, b, r);
      for (int i = 1; i <= n; ++i) {
        const double cur = sinh_map(static_cast<double>(i) / n, b, r);
        dmin = std::min(dmin, cur - prev);
        dmax = std::max(dmax, cur - prev);
        prev = cur;
      }
      return dmax / dmin;
    };
    for (int it = 0; it < 80; ++it) {
      beta = 0.5 * (lo + hi);
      (ratio_of(beta) < ratio ? lo : hi) = beta;
    }
  }
  for (int i = 0; i <= n; ++i) {
    f(i) = x0 + L * sinh_map(static_cast<double>(i) / n, beta, r);
  }
  f(0) = x0;
  f(n) = x1;
  // Exact mirror symmetry when the cluster sits at the domain center.
  if (std::abs(xcl - 0.5 * (x0 + x1)) < 1e-12 * L) {
    for (int i = 0; i < (n + 1) / 2; ++i) f(n - i) = x0 + x1 - f(i);
    if (n % 2 == 0) f(n / 2) = 0.5 * (x0 + x1);
  }
  return f;
}

}  // namespace

StretchedGrid StretchedGrid::build(const GridSpec& spec) {
  spec.validate();
  StretchedGrid g;
  g.spec_ = spec;
  g.xf_ = build_faces(spec.nx, spec.xmin, spec.xmax, spec.cluster_x, spec.stretch_ratio);
  g.yf_ = build_faces(spec.ny, spec.ymin, spec.ymax, spec.cluster_y, spec.stretch_ratio);
  g.xc_.resize(spec.nx);
  g.yc_.resize(spec.ny);
  g.dx_.resize(spec.nx);
  g.dy_.resize(spec.ny);
  for (int i = 0; i < spec.nx; ++i) {
    g.xc_(i) = 0.5 * (g.xf_(i) + g.xf_(i + 1));
    g.dx_(i) = g.xf_(i + 1) - g.xf_(i);
  }
  for (int j = 0; j < spec.ny; ++j) {
    g.yc_(j) = 0.5 * (g.yf_(j) + g.yf_(j + 1));
    g.dy_(j) = g.yf_(j + 1) - g.yf_(j);
  }
  if (g.dx_.minCoeff() <= 0.0 || g.dy_.minCoeff() <= 0.0) {
    throw ParameterError("grid mapping is not monotone; lower stretch_ratio");
  }
  g.min_spacing_ = std::min(g.dx_.minCoeff(), g.dy_.minCoeff());
  return g;
}

int StretchedGrid::locate(const Eigen::ArrayXd& f, double v) {
  const int n = static_cast<int>(f.size()) - 1;
  const double* begin = f.data();
  const double* it = std::upper_bound(begin, begin + n + 1, v);
  int idx = static_cast<int>(it - begin) - 1;
  return std::clamp(idx, 0, n - 1);
}

double StretchedGrid::smooth_spacing(const Eigen::ArrayXd& centers, const Eigen::ArrayXd& widths,
                                     double v) {
  const int n = static_cast<int>(centers.size());
  if (v <= centers(0)) return widths(0);
  if (v >= centers(n - 1)) return widths(n - 1);
  const double* begin = centers.data();
  const int j = static_cast<int>(std::upper_bound(begin, begin + n, v) - begin) - 1;
  const double t = (v - centers(j)) / (centers(j + 1) - centers(j));
  return (1.0 - t) * widths(j) + t * widths(j + 1);
}

}  // namespace flyer
