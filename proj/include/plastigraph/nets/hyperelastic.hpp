#pragma once

#include <array>
#include <vector>

#include "plastigraph/fem/dataset.hpp"
#include "plastigraph/fem/material.hpp"
#include "plastigraph/nets/common.hpp"
#include "plastigraph/numcore/layers.hpp"

namespace plastigraph::nets {

using fem::Mat3;
using fem::Vec3;

/// Homogenized elastic state and its stress.
struct ElasticSample {
  Vec3 eps_e = Vec3::Zero();
  double eps_e33 = 0.0;
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
};

/// The in-plane argument of the energy. Plane strain with a non-zero elastic
/// eps33 is folded into an in-plane strain: e + nu * e33 * (1, 1, 0). With it the
/// in-plane stress is the gradient of a function of three components only.
Vec3 shifted_strain(const Vec3& eps_e, double eps_e33, double nu);
/// 1/2 sigma : e~ over the in-plane components (tensor shear counted twice).
double energy_target(const ElasticSample& s, double nu);

/// Every recorded step of every path, plus the unloaded origin.
std::vector<ElasticSample> elastic_samples(const std::vector<fem::PathRecord>& paths);

struct HyperelasticTrainOptions {
  double stress_weight = 1.0;
  double stiffness_weight = 0.0;  // > 0 adds a second-derivative term
  fem::MaterialParams stiffness_reference;  // target tangent for that term
};

/// psi(e~): dense(100, relu) -> square -> dense(100, relu) -> dense(1).
class HyperelasticNet {
 public:
  HyperelasticNet() = default;
  HyperelasticNet(std::uint64_t seed, double youngs, double nu, int width = 100);

  double nu() const { return nu_; }
  double youngs() const { return youngs_; }
  const num::Sequential& net() const { return net_; }

  double energy(const Vec3& e_tilde) const;
  /// d psi / d e~ = (s11, s22, 2 s12).
  Vec3 gradient(const Vec3& e_tilde) const;
  /// d gradient / d e~, from differentiating the recorded gradient.
  Mat3 hessian(const Vec3& e_tilde) const;
  /// In-plane stress (tensor shear) and the out-of-plane closure
  /// s33 = nu (s11 + s22) + E e33.
  void stress(const Vec3& eps_e, double eps_e33, Vec3& sigma, double& sigma33) const;

  LossHistory train(const std::vector<ElasticSample>& train_set,
                    const std::vector<ElasticSample>& validation_set, const NetTrainConfig& cfg,
                    const HyperelasticTrainOptions& opt = {});

  num::Json to_json() const;
  static HyperelasticNet from_json(const num::Json& doc);

 private:
  Matrix normalized_inputs(const std::vector<ElasticSample>& s) const;
  double batch_loss_value(const std::vector<ElasticSample>& s, const HyperelasticTrainOptions& opt);

  double youngs_ = 0.0;
  double nu_ = 0.0;
  num::Sequential net_;
  std::array<double, 3> in_scale_{1.0, 1.0, 1.0};
  double energy_scale_ = 1.0;
};

}  // namespace plastigraph::nets
