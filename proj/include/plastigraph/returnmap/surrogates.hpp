#pragma once

#include <filesystem>
#include <memory>

#include "plastigraph/fem/material.hpp"
#include "plastigraph/nets/flow.hpp"
#include "plastigraph/nets/hyperelastic.hpp"
#include "plastigraph/nets/kinetic.hpp"
#include "plastigraph/nets/yield.hpp"
#include "plastigraph/numcore/matrix.hpp"

namespace plastigraph::rm {

using fem::Mat3;
using fem::Vec3;
using num::Matrix;

/// psi(e~) with e~ the shifted in-plane elastic strain; see nets::shifted_strain.
class ElasticModel {
 public:
  virtual ~ElasticModel() = default;
  virtual double nu() const = 0;
  virtual double youngs() const = 0;
  /// (s11, s22, 2 s12)
  virtual Vec3 gradient(const Vec3& e_tilde) const = 0;
  virtual Mat3 hessian(const Vec3& e_tilde) const = 0;
};

class YieldModel {
 public:
  virtual ~YieldModel() = default;
  virtual double value(double p, double q, double xi) const = 0;
  /// (df/dp, df/dq, df/dxi)
  virtual Eigen::Vector3d gradient(double p, double q, double xi) const = 0;
  /// Units of f per unit of stress near the surface.
  virtual double per_stress() const = 0;
  virtual bool extrapolating(double, double, double) const { return false; }
};

class KineticModel {
 public:
  virtual ~KineticModel() = default;
  virtual int d_enc() const = 0;
  virtual int history_length() const = 0;
  /// history: length x 3, oldest first -> 1 x D_enc
  virtual Matrix zeta(const Matrix& history) const = 0;
};

/// Trial stress in the principal frame of the trial elastic strain.
struct FlowContext {
  Eigen::Vector3d principal_stress = Eigen::Vector3d::Zero();  // (s1, s2, s33)
};

class FlowModel {
 public:
  virtual ~FlowModel() = default;
  /// Unit (g1, g2, g3) in the principal frame of the trial elastic strain.
  virtual Eigen::Vector3d direction(const Matrix& dzeta, const FlowContext& ctx) const = 0;
};

// Closed-form J2 with linear hardening: the analytic harness for the driver.
class J2Elastic final : public ElasticModel {
 public:
  explicit J2Elastic(const fem::MaterialParams& m) : mat_(m) {}
  double nu() const override { return mat_.nu; }
  double youngs() const override { return mat_.E; }
  Vec3 gradient(const Vec3& e) const override;
  Mat3 hessian(const Vec3& e) const override;

 private:
  fem::MaterialParams mat_;
};

class J2Yield final : public YieldModel {
 public:
  explicit J2Yield(const fem::MaterialParams& m) : mat_(m) {}
  double value(double p, double q, double xi) const override;
  Eigen::Vector3d gradient(double p, double q, double xi) const override;
  double per_stress() const override { return 1.0; }

 private:
  fem::MaterialParams mat_;
};

/// zeta = the newest plastic strain (D_enc = 3).
class J2Kinetic final : public KineticModel {
 public:
  int d_enc() const override { return 3; }
  int history_length() const override { return nets::kHistoryLength; }
  Matrix zeta(const Matrix& history) const override { return history.bottomRows(1); }
};

/// Radial return: the deviator of the trial stress.
class J2Flow final : public FlowModel {
 public:
  Eigen::Vector3d direction(const Matrix& dzeta, const FlowContext& ctx) const override;
};

class NetElastic final : public ElasticModel {
 public:
  explicit NetElastic(nets::HyperelasticNet n) : net_(std::move(n)) {}
  double nu() const override { return net_.nu(); }
  double youngs() const override { return net_.youngs(); }
  Vec3 gradient(const Vec3& e) const override { return net_.gradient(e); }
  Mat3 hessian(const Vec3& e) const override { return net_.hessian(e); }

 private:
  nets::HyperelasticNet net_;
};

class NetYield final : public YieldModel {
 public:
  explicit NetYield(nets::YieldNet n) : net_(std::move(n)) {}
  double value(double p, double q, double xi) const override { return net_.value(p, q, xi); }
  Eigen::Vector3d gradient(double p, double q, double xi) const override {
    return net_.gradient(p, q, xi);
  }
  double per_stress() const override { return net_.per_stress(); }
  bool extrapolating(double p, double q, double xi) const override {
    return net_.extrapolating(p, q, xi);
  }

 private:
  nets::YieldNet net_;
};

class NetKinetic final : public KineticModel {
 public:
  explicit NetKinetic(nets::KineticNet n) : net_(std::move(n)) {}
  int d_enc() const override { return net_.d_enc(); }
  int history_length() const override { return net_.history_length(); }
  Matrix zeta(const Matrix& history) const override { return net_.predict(history); }

 private:
  nets::KineticNet net_;
};

class NetFlow final : public FlowModel {
 public:
  explicit NetFlow(nets::FlowNet n) : net_(std::move(n)) {}
  Eigen::Vector3d direction(const Matrix& dzeta, const FlowContext&) const override {
    return net_.direction(dzeta);
  }

 private:
  nets::FlowNet net_;
};

struct ModelSet {
  std::shared_ptr<const ElasticModel> elastic;
  std::shared_ptr<const YieldModel> yield;
  std::shared_ptr<const KineticModel> kinetic;
  std::shared_ptr<const FlowModel> flow;

  static ModelSet analytic_j2(const fem::MaterialParams& m);
  /// hyperelastic.json, yield.json, kinetic.json and flow.json from `dir`.
  static ModelSet load(const std::filesystem::path& dir);
};

}  // namespace plastigraph::rm
