#include "plastigraph/returnmap/surrogates.hpp"

#include <cmath>

#include "plastigraph/error.hpp"
#include "plastigraph/numcore/serialize.hpp"
#include "plastigraph/returnmap/spectral.hpp"

namespace plastigraph::rm {

Vec3 J2Elastic::gradient(const Vec3& e) const {
  const double lam = mat_.lame_lambda(), mu = mat_.shear_modulus();
  const double tr = e(0) + e(1);
  return {lam * tr + 2 * mu * e(0), lam * tr + 2 * mu * e(1), 4 * mu * e(2)};
}

Mat3 J2Elastic::hessian(const Vec3&) const {
  const double lam = mat_.lame_lambda(), mu = mat_.shear_modulus();
  Mat3 h;
  h << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, 4 * mu;
  return h;
}

double J2Yield::value(double, double q, double xi) const {
  return q - (mat_.sigma_y0 + mat_.H * xi);
}

Eigen::Vector3d J2Yield::gradient(double, double, double) const { return {0.0, 1.0, -mat_.H}; }

Eigen::Vector3d J2Flow::direction(const Matrix&, const FlowContext& ctx) const {
  const Eigen::Vector3d g = ctx.principal_stress.array() - ctx.principal_stress.mean();
  const double n = g.norm();
  return n > 0.0 ? Eigen::Vector3d(g / n) : g;
}

ModelSet ModelSet::analytic_j2(const fem::MaterialParams& m) {
  return {std::make_shared<J2Elastic>(m), std::make_shared<J2Yield>(m), std::make_shared<J2Kinetic>(),
          std::make_shared<J2Flow>()};
}

ModelSet ModelSet::load(const std::filesystem::path& dir) {
  auto need = [&](const char* name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) {
      throw ArtifactError("missing model " + p.string() + "; rerun stage train-nets");
    }
    return num::read_json(p);
  };
  auto kinetic = nets::KineticNet::from_json(need("kinetic.json"));
  auto flow = nets::FlowNet::from_json(need("flow.json"));
  if (kinetic.d_enc() != flow.d_enc()) throw ArtifactError("kinetic and flow models disagree on D_enc");
  return {std::make_shared<NetElastic>(nets::HyperelasticNet::from_json(need("hyperelastic.json"))),
          std::make_shared<NetYield>(nets::YieldNet::from_json(need("yield.json"))),
          std::make_shared<NetKinetic>(std::move(kinetic)), std::make_shared<NetFlow>(std::move(flow))};
}

}  // namespace plastigraph::rm
