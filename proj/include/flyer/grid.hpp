#pragma once

#include <Eigen/Dense>

#include "flyer/errors.hpp"

namespace flyer {

/// Tensor-product staggered-grid description.
///
/// Clustering follows the interior-point sinh law (Hoffmann & Chiang form):
/// a stretch ratio of 1 gives a uniform grid; larger ratios concentrate cells
/// around the cluster center. When the cluster center coincides with the
/// domain center the coordinate arrays are built exactly mirror-symmetric so
/// the discrete operators inherit the reflection symmetry.
struct GridSpec {
  int nx = 128;
  int ny = 128;
  double xmin = -250.0, xmax = 250.0;
  double ymin = -250.0, ymax = 250.0;
  double cluster_x = 0.0;      ///< cluster center (defaults to the origin)
  double cluster_y = 0.0;
  double stretch_ratio = 4.0;  ///< max/min cell size; 1 = uniform

  void validate() const;
};

class StretchedGrid {
 public:
  static StretchedGrid build(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }

  // face coordinates (size n+1) and cell centers (size n)
  const Eigen::ArrayXd& xf() const { return xf_; }
  const Eigen::ArrayXd& yf() const { return yf_; }
  const Eigen::ArrayXd& xc() const { return xc_; }
  const Eigen::ArrayXd& yc() const { return yc_; }
  // cell widths dx(i) = xf(i+1) - xf(i)
  const Eigen::ArrayXd& dx() const { return dx_; }
  const Eigen::ArrayXd& dy() const { return dy_; }

  double min_spacing() const { return min_spacing_; }
  bool contains(double x, double y) const {
    return x >= spec_.xmin && x <= spec_.xmax && y >= spec_.ymin && y <= spec_.ymax;
  }
  /// Local cell size as a continuous function of position (linear between
  /// cell centers, clamped at the ends). Immersed-boundary coefficients must
  /// not jump when a moving node crosses a grid face, or interface iterations
  /// lock into limit cycles around the discontinuity.
  double local_dx(double x) const { return smooth_spacing(xc_, dx_, x); }
  double local_dy(double y) const { return smooth_spacing(yc_, dy_, y); }

  /// Index of the cell containing x (clamped to the domain).
  int cell_index_x(double x) const { return locate(xf_, x); }
  int cell_index_y(double y) const { return locate(yf_, y); }

 private:
  static int locate(const Eigen::ArrayXd& f, double v);
  static double smooth_spacing(const Eigen::ArrayXd& centers, const Eigen::ArrayXd& widths,
                               double v);

  GridSpec spec_;
  Eigen::ArrayXd xf_, yf_, xc_, yc_, dx_, dy_;
  double min_spacing_ = 0.0;
};

}  // namespace flyer
