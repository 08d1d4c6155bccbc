#pragma once

#include <Eigen/Dense>

namespace plastigraph::rm {

/// Principal decomposition of a symmetric in-plane tensor given in Voigt form
/// (11, 22, 12) with tensor shear. values(0) >= values(1); column A of `axes`
/// is n^A. The out-of-plane axis is fixed.
struct Spectral2 {
  Eigen::Vector2d values;
  Eigen::Matrix2d axes;

  /// sum_A v_A n^A (x) n^A back in Voigt form.
  Eigen::Vector3d compose(const Eigen::Vector2d& v) const;
  /// n^A . t . n^A for a Voigt tensor t.
  Eigen::Vector2d project(const Eigen::Vector3d& t) const;
};

Spectral2 spectral_decompose(const Eigen::Vector3d& voigt);

}  // namespace plastigraph::rm
