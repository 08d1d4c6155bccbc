#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "plastigraph/numcore/matrix.hpp"

namespace testutil {

using plastigraph::num::Matrix;

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

/// Central differences of a scalar function of a matrix.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                          double h) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = xp.data()[i];
    xp.data()[i] = x0 + h;
    const double fp = f(xp);
    xp.data()[i] = x0 - h;
    const double fm = f(xp);
    xp.data()[i] = x0;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(|b|_inf, floor)
inline double rel_err(const Matrix& a, const Matrix& b, double floor = 1e-8) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), floor);
}

}  // namespace testutil
