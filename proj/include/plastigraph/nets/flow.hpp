#pragma once

#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/nets/common.hpp"
#include "plastigraph/numcore/layers.hpp"

namespace plastigraph::nets {

/// Principal components (g1, g2, g3) of a plastic strain increment in the
/// principal frame of the elastic strain, g3 = -(g1 + g2), scaled to unit length.
Eigen::Vector3d principal_flow_target(const fem::Vec3& d_eps_p, const fem::Vec3& eps_e);

struct FlowData {
  Matrix dzeta;   // rows of zeta_n - zeta_{n-1}
  Matrix target;  // rows of (g1, g2)
  std::vector<int> step;  // source step of each row
};

/// Plastic steps of one path with |d eps_p| > min_increment. `zeta` holds one
/// row per recorded step, `zeta0` is the code of the unloaded state.
FlowData flow_data(const fem::PathRecord& path, const Matrix& zeta, const Matrix& zeta0,
                   double min_increment = 1e-10);
void append(FlowData& into, const FlowData& more);

/// dense(100, relu) x 4 -> dense(2).
class FlowNet {
 public:
  FlowNet() = default;
  FlowNet(std::uint64_t seed, int d_enc);

  int d_enc() const { return d_enc_; }
  const num::Sequential& net() const { return net_; }

  /// Raw network output (g1, g2) for rows of dzeta.
  Matrix predict(const Matrix& dzeta) const;
  /// (g1, g2, -(g1 + g2)) renormalized to unit length.
  Eigen::Vector3d direction(const Matrix& dzeta) const;

  LossHistory train(const FlowData& data, const NetTrainConfig& cfg);

  num::Json to_json() const;
  static FlowNet from_json(const num::Json& doc);

 private:
  int d_enc_ = 0;
  num::Sequential net_;
  num::Affine in_norm_;
};

}  // namespace plastigraph::nets
