#pragma once

#include <Eigen/Dense>

namespace flyer {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Counterclockwise rotation matrix.
inline Mat2 rot2(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 m;
  m << c, -s, s, c;
  return m;
}

/// 2-D cross product helpers: perp(v) = z_hat x v, cross2(a,b) = (a x b)_z.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace flyer
