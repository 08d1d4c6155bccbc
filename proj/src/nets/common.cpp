#include "plastigraph/nets/common.hpp"

#include <fstream>

#include "plastigraph/fem/dataset.hpp"

namespace plastigraph::nets {

void write_loss_csv(const std::filesystem::path& path, const LossHistory& h) {
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  const bool val = !h.validation.empty();
  out << (val ? "epoch,train_loss,validation_loss\n" : "epoch,train_loss\n");
  for (std::size_t e = 0; e < h.train.size(); ++e) {
    out << e + 1 << ',' << fem::format_double(h.train[e]);
    if (val && e < h.validation.size()) out << ',' << fem::format_double(h.validation[e]);
    out << '\n';
  }
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double validation_fraction,
                                                            std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ConfigError("validation fraction must lie in [0, 1)");
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  num::Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_val = static_cast<int>(std::lround(validation_fraction * n));
  std::vector<int> val(idx.begin(), idx.begin() + n_val), train(idx.begin() + n_val, idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<double> r2_per_column(const Matrix& truth, const Matrix& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols() || truth.rows() == 0) {
    throw ShapeError("r2: shape mismatch");
  }
  std::vector<double> out;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    const double ss_res = (truth.col(c) - pred.col(c)).squaredNorm();
    out.push_back(ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0));
  }
  return out;
}

double r2_pooled(const Matrix& truth, const Matrix& pred) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols() || truth.rows() == 0) {
    throw ShapeError("r2: shape mismatch");
  }
  const Matrix centered = truth.rowwise() - truth.colwise().mean();
  const double ss_tot = centered.squaredNorm();
  const double ss_res = (truth - pred).squaredNorm();
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

}  // namespace plastigraph::nets
