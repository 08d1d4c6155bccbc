#include "plastigraph/fem/material.hpp"

#include <array>
#include <cmath>

#include "plastigraph/error.hpp"

namespace plastigraph::fem {

void MaterialParams::validate() const {
  if (!(E > 0.0)) throw ConfigError("material: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw ConfigError("material: nu must lie in [0, 0.5)");
  if (!(sigma_y0 > 0.0)) throw ConfigError("material: sigma_y0 must be positive");
  if (!(H >= 0.0)) throw ConfigError("material: H must be non-negative");
}

Mat3 to_tensor(const Vec3& v, double v33) {
  Mat3 t;
  t << v(0), v(2), 0.0, v(2), v(1), 0.0, 0.0, 0.0, v33;
  return t;
}

double mean_stress(const Vec3& s, double s33) { return (s(0) + s(1) + s33) / 3.0; }

double von_mises(const Vec3& s, double s33) {
  const double p = mean_stress(s, s33);
  const double a = s(0) - p, b = s(1) - p, c = s33 - p;
  return std::sqrt(1.5 * (a * a + b * b + c * c + 2.0 * s(2) * s(2)));
}

double equivalent_strain(const Vec3& ep) {
  const double c = -(ep(0) + ep(1));
  return std::sqrt(2.0 / 3.0 * (ep(0) * ep(0) + ep(1) * ep(1) + c * c + 2.0 * ep(2) * ep(2)));
}

void elastic_stress(const MaterialParams& mat, const Vec3& eps_e, double eps_e33, Vec3& sigma,
                    double& sigma33) {
  const double lam = mat.lame_lambda();
  const double mu = mat.shear_modulus();
  const double tr = eps_e(0) + eps_e(1) + eps_e33;
  sigma(0) = lam * tr + 2.0 * mu * eps_e(0);
  sigma(1) = lam * tr + 2.0 * mu * eps_e(1);
  sigma(2) = 2.0 * mu * eps_e(2);
  sigma33 = lam * tr + 2.0 * mu * eps_e33;
}

Mat3 elastic_tangent(const MaterialParams& mat) {
  const double lam = mat.lame_lambda();
  const double mu = mat.shear_modulus();
  Mat3 d;
  d << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, mu;
  return d;
}

namespace {

constexpr double kYieldTolerance = 1e-9;
constexpr std::array<std::array<int, 2>, 3> kVoigt{{{0, 0}, {1, 1}, {0, 1}}};

double energy(const Mat3& eps_e, const Mat3& sigma) { return 0.5 * (eps_e.array() * sigma.array()).sum(); }

}  // namespace

LocalUpdate local_j2_update(const PointState& state, const Vec3& d_eps, const MaterialParams& mat,
                            double yield_scale) {
  if (!d_eps.allFinite()) throw NumericalError("local_j2_update: non-finite strain increment");
  const double G = mat.shear_modulus();
  const double K = mat.bulk_modulus();

  const Vec3 ee_in = state.eps_e + d_eps;
  const double ee33 = state.eps_p(0) + state.eps_p(1);
  const Mat3 ee = to_tensor(ee_in, ee33);
  const double tr = ee.trace();
  const Mat3 dev_e = ee - tr / 3.0 * Mat3::Identity();
  const Mat3 s_tr = 2.0 * G * dev_e;
  const double norm_s = std::sqrt((s_tr.array() * s_tr.array()).sum());
  const double q_tr = std::sqrt(1.5) * norm_s;
  const double sy = yield_scale * mat.sigma_y0 + mat.H * state.xi;
  const double f_tr = q_tr - sy;

  LocalUpdate out;
  out.state = state;
  // Round-off tolerance: returning exactly onto the surface must stay elastic.
  if (f_tr <= kYieldTolerance * sy) {
    Mat3 sig = K * tr * Mat3::Identity() + s_tr;
    out.state.eps_e = ee_in;
    out.state.sigma = Vec3(sig(0, 0), sig(1, 1), sig(0, 1));
    out.state.sigma33 = sig(2, 2);
    out.state.psi = energy(ee, sig);
    out.tangent = elastic_tangent(mat);
    return out;
  }

  const double dgamma = f_tr / (3.0 * G + mat.H);
  const Mat3 n = s_tr / norm_s;
  const Mat3 d_ep = dgamma * std::sqrt(1.5) * n;
  const Mat3 ee_new = ee - d_ep;
  const double shrink = 1.0 - 3.0 * G * dgamma / q_tr;
  const Mat3 sig = K * tr * Mat3::Identity() + shrink * s_tr;

  out.plastic = true;
  out.dgamma = dgamma;
  out.state.eps_p += Vec3(d_ep(0, 0), d_ep(1, 1), d_ep(0, 1));
  out.state.eps_e = Vec3(ee_new(0, 0), ee_new(1, 1), ee_new(0, 1));
  out.state.xi += dgamma;
  out.state.sigma = Vec3(sig(0, 0), sig(1, 1), sig(0, 1));
  out.state.sigma33 = sig(2, 2);
  out.state.psi = energy(ee_new, sig);

  // Consistent tangent, then restricted to the in-plane Voigt slots.
  const double c_dev = 2.0 * G * shrink;
  const double c_nn = 6.0 * G * G * (dgamma / q_tr - 1.0 / (3.0 * G + mat.H));
  auto delta = [](int i, int j) { return i == j ? 1.0 : 0.0; };
  for (int a = 0; a < 3; ++a) {
    const auto [i, j] = kVoigt[a];
    for (int b = 0; b < 3; ++b) {
      const auto [k, l] = kVoigt[b];
      const double isym = 0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
      const double idev = isym - delta(i, j) * delta(k, l) / 3.0;
      out.tangent(a, b) = K * delta(i, j) * delta(k, l) + c_dev * idev + c_nn * n(i, j) * n(k, l);
    }
  }
  return out;
}

}  // namespace plastigraph::fem
