#include "plastigraph/returnmap/spectral.hpp"

#include <cmath>

namespace plastigraph::rm {

Spectral2 spectral_decompose(const Eigen::Vector3d& v) {
  const double mean = 0.5 * (v(0) + v(1));
  const double half = 0.5 * (v(0) - v(1));
  const double radius = std::hypot(half, v(2));
  // Angle of the major axis; atan2(0, 0) = 0 keeps the axes aligned for
  // repeated eigenvalues.
  const double angle = 0.5 * std::atan2(v(2), half);
  const double c = std::cos(angle), s = std::sin(angle);
  Spectral2 out;
  out.values << mean + radius, mean - radius;
  out.axes << c, -s, s, c;
  return out;
}

Eigen::Vector3d Spectral2::compose(const Eigen::Vector2d& v) const {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  for (int a = 0; a < 2; ++a) {
    const double nx = axes(0, a), ny = axes(1, a);
    t(0) += v(a) * nx * nx;
    t(1) += v(a) * ny * ny;
    t(2) += v(a) * nx * ny;
  }
  return t;
}

Eigen::Vector2d Spectral2::project(const Eigen::Vector3d& t) const {
  Eigen::Vector2d out;
  for (int a = 0; a < 2; ++a) {
    const double nx = axes(0, a), ny = axes(1, a);
    out(a) = nx * nx * t(0) + ny * ny * t(1) + 2.0 * nx * ny * t(2);
  }
  return out;
}

}  // namespace plastigraph::rm
