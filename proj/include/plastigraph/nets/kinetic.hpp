#pragma once

#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/nets/common.hpp"
#include "plastigraph/numcore/layers.hpp"

namespace plastigraph::nets {

inline constexpr int kHistoryLength = 4;

/// Histories (length x 3, oldest first) of the homogenized plastic strain, one
/// per recorded step. Values enter the window only on plastic steps, and the
/// window is left-padded with the initial (zero) value.
std::vector<Matrix> plastic_histories(const fem::PathRecord& path, int length = kHistoryLength);

/// GRU(32) -> GRU(32) -> dense(100, relu) -> dense(100, relu) -> dense(D_enc).
class KineticNet {
 public:
  KineticNet() = default;
  KineticNet(std::uint64_t seed, int d_enc, int history_length = kHistoryLength);

  int d_enc() const { return d_enc_; }
  int history_length() const { return length_; }
  const num::Sequential& net() const { return net_; }

  /// One history (length x 3) -> 1 x D_enc.
  Matrix predict(const Matrix& history) const;
  /// B histories -> B x D_enc.
  Matrix predict_batch(const std::vector<Matrix>& histories) const;

  LossHistory train(const std::vector<Matrix>& histories, const Matrix& zeta, const NetTrainConfig& cfg);

  num::Json to_json() const;
  static KineticNet from_json(const num::Json& doc);

 private:
  std::vector<Matrix> time_major(const std::vector<Matrix>& histories,
                                 const std::vector<int>& rows) const;

  int d_enc_ = 0;
  int length_ = kHistoryLength;
  num::Sequential net_;
  num::Affine in_norm_ = num::Affine::identity(3);
  num::Affine out_norm_;
};

}  // namespace plastigraph::nets
