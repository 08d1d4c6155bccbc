#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plastigraph/autoencoder/autoencoder.hpp"
#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/mesh/mesh.hpp"
#include "plastigraph/returnmap/surrogates.hpp"

namespace plastigraph::rm {

struct MacroState {
  int step = 0;
  Vec3 eps = Vec3::Zero();  // total
  Vec3 eps_e = Vec3::Zero();
  Vec3 eps_p = Vec3::Zero();
  double xi = 0.0;
  Matrix zeta;     // 1 x D_enc
  Matrix dzeta;    // last plastic increment of zeta, 1 x D_enc
  Matrix history;  // length x 3, oldest first; advanced on plastic steps only
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;

  /// Out-of-plane elastic strain under the plane-strain constraint.
  double eps_e33() const { return eps_p(0) + eps_p(1); }
};

struct Trial {
  Vec3 eps_e = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
  double p = 0.0, q = 0.0;
  double f = 0.0;
};

struct StepRecord {
  int step = 0;
  Vec3 eps = Vec3::Zero();
  Vec3 eps_p = Vec3::Zero();
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
  double p = 0.0, q = 0.0, xi = 0.0;
  bool plastic = false;
  int iterations = 0;   // Newton iterations summed over passes
  int passes = 0;       // flow / kinetic fixed-point passes
  bool bisection = false;
  bool kink = false;    // accepted on a jump of the learned stress
  bool associative_restart = false;
  double f = 0.0;       // yield value at the accepted state
  double dlambda = 0.0;
  bool extrapolated = false;
  Matrix zeta;
};

struct ReturnMapOptions {
  double sigma_y0 = 1.0e5;
  double tolerance = 1e-6;  // tol_f = tolerance * sigma_y0, in stress units
  int max_newton = 50;
  int max_passes = 10;
  double pass_tolerance = 1e-10;  // change of the unit flow direction
};

class ReturnMap {
 public:
  ReturnMap(ModelSet models, ReturnMapOptions opts = {});

  const ModelSet& models() const { return models_; }
  /// Yield tolerance in the units of the yield model.
  double tol_f() const;

  MacroState initial_state() const;
  /// Elastic predictor; does not touch `state`.
  Trial trial(const MacroState& state, const Vec3& d_eps) const;
  StepRecord step(MacroState& state, const Vec3& d_eps) const;
  std::vector<StepRecord> simulate(const std::vector<Vec3>& increments) const;

  void stress(const Vec3& eps_e, double eps_e33, Vec3& sigma, double& sigma33) const;

 private:
  struct Solve {
    double dlambda = 0.0;
    int iterations = 0;
    bool bisection = false;
    bool kink = false;
    double f = 0.0;
    Vec3 eps_e;
    double eps_e33 = 0.0;
    Vec3 sigma;
    double sigma33 = 0.0;
    double p = 0.0, q = 0.0;
    Vec3 d_eps_p;
  };
  Solve solve(const MacroState& state, const Trial& tr, const Vec3& d_eps,
              const Eigen::Vector3d& g) const;
  Eigen::Vector3d associative_direction(const MacroState& state, const Trial& tr) const;

  ModelSet models_;
  ReturnMapOptions opts_;
};

/// One Voigt increment per non-empty line; '#' starts a comment.
std::vector<Vec3> read_strain_program(const std::filesystem::path& path);
/// Cumulative strain of a program as increments.
std::vector<Vec3> increments_of(const std::vector<Vec3>& strains);

/// step,p,q,xi,flag,iterations,zeta_0,...
void write_prediction_csv(const std::filesystem::path& path, const std::vector<StepRecord>& rec);

/// Decoded plastic field for a code, assembled into the mesh graph.
mesh::PlasticityGraph decode_current(const Matrix& zeta, const ae::GraphAutoencoder& decoder,
                                     const mesh::PlasticityGraph& graph);

}  // namespace plastigraph::rm
