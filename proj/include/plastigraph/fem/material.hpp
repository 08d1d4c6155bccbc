#pragma once

#include <Eigen/Dense>

namespace plastigraph::fem {

using Vec3 = Eigen::Vector3d;  // in-plane Voigt (11, 22, 12), tensor shear
using Mat3 = Eigen::Matrix3d;

struct MaterialParams {
  double E = 2.0799e6;
  double nu = 0.3;
  double sigma_y0 = 1.0e5;
  double H = 0.1 * 2.0799e6;

  void validate() const;
  double shear_modulus() const { return E / (2.0 * (1.0 + nu)); }
  double bulk_modulus() const { return E / (3.0 * (1.0 - 2.0 * nu)); }
  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
};

/// One integration point. Out-of-plane total strain is zero, so the elastic
/// out-of-plane strain is ep11 + ep22.
struct PointState {
  Vec3 eps_e = Vec3::Zero();
  Vec3 eps_p = Vec3::Zero();
  double xi = 0.0;
  Vec3 sigma = Vec3::Zero();
  double sigma33 = 0.0;
  double psi = 0.0;
};

struct LocalUpdate {
  PointState state;
  Mat3 tangent;  // d sigma / d (eps11, eps22, 2 eps12)
  bool plastic = false;
  double dgamma = 0.0;
};

/// Full 3x3 tensor from in-plane Voigt and an out-of-plane value.
Mat3 to_tensor(const Vec3& v, double v33);
/// p = tr/3 and q = sqrt(3/2) |dev| of a plane-strain stress.
double mean_stress(const Vec3& s, double s33);
double von_mises(const Vec3& s, double s33);
/// sqrt(2/3) |e| of a traceless plane-strain plastic strain (increment).
double equivalent_strain(const Vec3& ep);

/// Isotropic linear elasticity for a plane-strain elastic strain with the given
/// out-of-plane elastic component.
void elastic_stress(const MaterialParams& mat, const Vec3& eps_e, double eps_e33, Vec3& sigma,
                    double& sigma33);
Mat3 elastic_tangent(const MaterialParams& mat);

/// Radial return for J2 with linear isotropic hardening. `yield_scale` scales
/// only the initial yield stress.
LocalUpdate local_j2_update(const PointState& state, const Vec3& d_eps, const MaterialParams& mat,
                            double yield_scale = 1.0);

}  // namespace plastigraph::fem
