#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plastigraph/baselines/augment.hpp"
#include "plastigraph/nets/common.hpp"
#include "plastigraph/numcore/layers.hpp"

namespace plastigraph::baselines {

inline constexpr int kWindow = 30;

/// Window (length x 3, oldest first) ending at row k, left-padded with the
/// unloaded initial strain.
Matrix strain_window(const Series& s, int k, int length = kWindow);

/// GRU(32) -> GRU(32) -> dense(100, relu) -> dense(100, relu) -> dense(2): (p, q).
class BaselineGru {
 public:
  BaselineGru() = default;
  explicit BaselineGru(std::uint64_t seed, int window = kWindow);

  int window() const { return window_; }
  const num::Sequential& net() const { return net_; }

  Matrix predict(const Matrix& window) const;  // 1 x 2
  Matrix predict_batch(const std::vector<Matrix>& windows) const;
  Matrix predict_series(const Series& s) const;  // rows x 2

  /// MSE on standardized (p, q) over all windows of the given series.
  nets::LossHistory train(const std::vector<Series>& series, const nets::NetTrainConfig& cfg);

  num::Json to_json() const;
  static BaselineGru from_json(const num::Json& doc);

 private:
  std::vector<Matrix> time_major(const std::vector<Matrix>& windows, const std::vector<int>& rows) const;

  int window_ = kWindow;
  num::Sequential net_;
  num::Affine in_norm_ = num::Affine::identity(3);
  num::Affine out_norm_ = num::Affine::identity(2);
};

/// Root-mean-square error of the q column.
double rmse_q(const Matrix& truth, const Matrix& pred);
double peak_q(const Matrix& truth);

struct CompareRow {
  int path = 0;
  std::string tag;
  double peak_q = 0.0;
  double rmse_return_map = 0.0;
  double rmse_baseline = 0.0;
  double rmse_baseline_augmented = 0.0;
};

/// path,tag,peak_q,rmse_return_map,rmse_baseline,rmse_baseline_augmented
void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows);

}  // namespace plastigraph::baselines
