#pragma once

#include <Eigen/Dense>

namespace plastigraph::num {

/// Row-major dense matrix; rows index samples (or graph nodes), columns features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace plastigraph::num
