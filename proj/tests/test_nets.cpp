#include <doctest.h>

#include <cmath>
#include <random>

#include "plastigraph/error.hpp"
#include "plastigraph/fem/material.hpp"
#include "plastigraph/nets/flow.hpp"
#include "plastigraph/nets/hyperelastic.hpp"
#include "plastigraph/nets/kinetic.hpp"
#include "plastigraph/nets/yield.hpp"
#include "support.hpp"

using namespace plastigraph;
using nets::Matrix;
using fem::Vec3;

namespace {

std::vector<nets::ElasticSample> synthetic_elastic(int n, std::uint64_t seed,
                                                   const fem::MaterialParams& mat) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> e(-0.02, 0.02), e33(-0.005, 0.005);
  std::vector<nets::ElasticSample> out(1);
  for (int k = 1; k < n; ++k) {
    nets::ElasticSample s;
    s.eps_e = Vec3(e(rng), e(rng), e(rng));
    s.eps_e33 = e33(rng);
    fem::elastic_stress(mat, s.eps_e, s.eps_e33, s.sigma, s.sigma33);
    out.push_back(s);
  }
  return out;
}

// Circle of radius r (raw units) centred in the box [-1, 1]^2.
nets::YieldLabelSet circle_labels(double r, int points, int collocation) {
  std::vector<nets::SurfacePoint> surface;
  for (int k = 0; k < points; ++k) {
    const double a = 2.0 * M_PI * k / points;
    surface.push_back({r * std::cos(a), r * std::sin(a), 0.1 * (k % 5)});
  }
  nets::YieldBox box;
  box.p_lo = box.q_lo = -1.0;
  box.p_hi = box.q_hi = 1.0;
  box.xi_lo = 0.0;
  box.xi_hi = 0.4;
  nets::YieldLabelConfig cfg;
  cfg.bins = 1;
  cfg.collocation_per_bin = collocation;
  cfg.seed = 4;
  return nets::build_yield_labels(surface, box, cfg, true);
}

// Polyline resampled to `n` evenly spaced points along its length.
std::vector<Eigen::Vector2d> resample(const std::vector<Eigen::Vector2d>& poly, bool closed, int n) {
  std::vector<Eigen::Vector2d> pts = poly;
  if (closed) pts.push_back(poly.front());
  std::vector<double> cum{0.0};
  for (std::size_t k = 1; k < pts.size(); ++k) cum.push_back(cum.back() + (pts[k] - pts[k - 1]).norm());
  std::vector<Eigen::Vector2d> out;
  std::size_t seg = 1;
  for (int i = 0; i < n; ++i) {
    const double s = cum.back() * i / (n - 1);
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(pts[seg - 1] + t * (pts[seg] - pts[seg - 1]));
  }
  return out;
}

fem::PathRecord proportional_record(int steps, const Vec3& direction, int yield_step) {
  fem::PathRecord rec;
  Vec3 ep = Vec3::Zero();
  for (int n = 1; n <= steps; ++n) {
    fem::StepRecord st;
    st.step = n;
    st.eps = 0.01 * n * Vec3(1.0, -0.2, 0.1);
    st.plastic = n >= yield_step;
    if (st.plastic) ep += 1e-3 * direction;
    st.eps_p = ep;
    rec.steps.push_back(st);
  }
  return rec;
}

}  // namespace

TEST_SUITE("nets") {
  TEST_CASE("shifted strain folds the out-of-plane component into plane-strain elasticity") {
    fem::MaterialParams mat;
    std::mt19937_64 rng(1);
    const double lam = mat.lame_lambda(), mu = mat.shear_modulus();
    for (int k = 0; k < 50; ++k) {
      Matrix r = testutil::random_matrix(1, 4, rng, -0.01, 0.01);
      const Vec3 e(r(0, 0), r(0, 1), r(0, 2));
      Vec3 sigma;
      double s33;
      fem::elastic_stress(mat, e, r(0, 3), sigma, s33);
      const Vec3 et = nets::shifted_strain(e, r(0, 3), mat.nu);
      const Vec3 plane(lam * (et(0) + et(1)) + 2 * mu * et(0), lam * (et(0) + et(1)) + 2 * mu * et(1),
                       2 * mu * et(2));
      CHECK((plane - sigma).norm() <= 1e-10 * sigma.norm() + 1e-6);
      CHECK(std::abs(s33 - (mat.nu * (sigma(0) + sigma(1)) + mat.E * r(0, 3))) <= 1e-9 * std::abs(s33) + 1e-6);
    }
  }

  TEST_CASE("energy target has the stress as its gradient") {
    fem::MaterialParams mat;
    nets::ElasticSample s;
    s.eps_e = Vec3(0.01, -0.004, 0.003);
    s.eps_e33 = 0.002;
    fem::elastic_stress(mat, s.eps_e, s.eps_e33, s.sigma, s.sigma33);
    const Vec3 et = nets::shifted_strain(s.eps_e, s.eps_e33, mat.nu);
    const double lam = mat.lame_lambda(), mu = mat.shear_modulus();
    auto psi = [&](const Vec3& x) {
      return 0.5 * lam * std::pow(x(0) + x(1), 2) + mu * (x(0) * x(0) + x(1) * x(1) + 2 * x(2) * x(2));
    };
    CHECK(std::abs(nets::energy_target(s, mat.nu) - psi(et)) <= 1e-9 * psi(et));
    const double h = 1e-7;
    for (int i = 0; i < 3; ++i) {
      Vec3 a = et, b = et;
      a(i) += h;
      b(i) -= h;
      const double fd = (psi(a) - psi(b)) / (2 * h);
      const double expect = i < 2 ? s.sigma(i) : 2 * s.sigma(2);
      CHECK(std::abs(fd - expect) <= 1e-5 * std::abs(expect) + 1e-3);
    }
  }

  TEST_CASE("hyperelastic derivatives are consistent with its own energy") {
    nets::HyperelasticNet net(3, 2.0799e6, 0.3, 16);
    const Vec3 x(0.3, -0.2, 0.1);
    const Vec3 g = net.gradient(x);
    const Eigen::Matrix3d hess = net.hessian(x);
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      Vec3 a = x, b = x;
      a(i) += h;
      b(i) -= h;
      const double fd = (net.energy(a) - net.energy(b)) / (2 * h);
      CHECK(std::abs(fd - g(i)) <= 1e-3 * std::max(std::abs(g(i)), 1e-6));
      const Vec3 dg = (net.gradient(a) - net.gradient(b)) / (2 * h);
      for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(dg(j) - hess(j, i)) <= 1e-3 * std::max(hess.cwiseAbs().maxCoeff(), 1e-9));
      }
    }
  }

  TEST_CASE("hyperelastic net learns plane-strain elasticity") {
    fem::MaterialParams mat;
    auto train = synthetic_elastic(500, 1, mat);
    auto val = synthetic_elastic(100, 2, mat);
    nets::HyperelasticNet net(7, mat.E, mat.nu);
    nets::NetTrainConfig cfg;
    cfg.epochs = 300;
    cfg.batch = 50;
    cfg.seed = 3;
    auto hist = net.train(train, val, cfg);
    CHECK(hist.train.back() < hist.train.front());
    CHECK(hist.validation.size() == 300);

    Matrix st(static_cast<Eigen::Index>(val.size()), 3), sp(static_cast<Eigen::Index>(val.size()), 3);
    Matrix et(static_cast<Eigen::Index>(val.size()), 1), ep(static_cast<Eigen::Index>(val.size()), 1);
    double max_psi = 0.0;
    for (std::size_t k = 0; k < val.size(); ++k) {
      Vec3 s;
      double s33;
      net.stress(val[k].eps_e, val[k].eps_e33, s, s33);
      const auto r = static_cast<Eigen::Index>(k);
      st.row(r) = val[k].sigma.transpose();
      sp.row(r) = s.transpose();
      et(r, 0) = nets::energy_target(val[k], mat.nu);
      ep(r, 0) = net.energy(nets::shifted_strain(val[k].eps_e, val[k].eps_e33, mat.nu));
      max_psi = std::max(max_psi, et(r, 0));
    }
    CHECK(nets::r2_pooled(st, sp) >= 0.99);
    CHECK(nets::r2_pooled(et, ep) >= 0.99);
    CHECK(std::abs(net.energy(Vec3::Zero())) <= 1e-2 * max_psi);

    auto back = nets::HyperelasticNet::from_json(num::Json::parse(net.to_json().dump()));
    const Vec3 probe(0.004, -0.001, 0.002);
    CHECK(back.energy(probe) == net.energy(probe));
    CHECK(back.gradient(probe) == net.gradient(probe));
    CHECK_THROWS_AS(nets::YieldNet::from_json(net.to_json()), ArtifactError);
  }

  TEST_CASE("hyperelastic stiffness term trains") {
    fem::MaterialParams mat;
    auto train = synthetic_elastic(60, 5, mat);
    nets::HyperelasticNet net(1, mat.E, mat.nu, 12);
    nets::NetTrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch = 20;
    nets::HyperelasticTrainOptions opt;
    opt.stiffness_weight = 1.0;
    opt.stiffness_reference = mat;
    auto h = net.train(train, {}, cfg, opt);
    CHECK(h.train.size() == 5);
    CHECK(h.validation.empty());
    CHECK(std::isfinite(h.train.back()));
  }

  TEST_CASE("yield labels: surface, interior and sign") {
    auto labels = circle_labels(0.5, 64, 50);
    REQUIRE(labels.bins.size() == 1);
    const auto& bin = labels.bins[0];
    for (const auto& v : bin.surface) CHECK(std::abs(nets::signed_label(bin, v)) <= 1e-12);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0, 0)) < 0.0);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0.9, 0.9)) > 0.0);
    for (int i = 0; i < labels.size(); ++i) {
      if (labels.on_surface[i]) CHECK(labels.label[i] == 0.0);
    }
  }

  TEST_CASE("yield labels agree with a densely resampled polyline") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (bool closed : {true, false}) {
      std::vector<Eigen::Vector2d> pts;
      for (int k = 0; k < 15; ++k) {
        const double a = closed ? 2 * M_PI * k / 15 : M_PI * (k + 0.5) / 15;
        const double r = 0.5 + 0.1 * std::sin(3 * a);
        pts.push_back({r * std::cos(a), closed ? r * std::sin(a) : -0.6 + r * std::sin(a)});
      }
      nets::YieldBin bin = nets::make_bin(pts, closed, -0.6);
      auto dense = resample(bin.surface, closed, 10000);
      for (int k = 0; k < 50; ++k) {
        const Eigen::Vector2d x(u(rng), u(rng));
        double best = 1e9;
        for (const auto& d : dense) best = std::min(best, (d - x).norm());
        const double label = nets::signed_label(bin, x);
        CHECK(std::abs(std::abs(label) - best) <= 0.01 * std::sqrt(8.0));
      }
    }
  }

  TEST_CASE("open arcs put the low-q side inside") {
    std::vector<Eigen::Vector2d> pts{{-0.5, 0.3}, {0.0, 0.35}, {0.5, 0.3}, {0.2, 0.32}};
    nets::YieldBin bin = nets::make_bin(pts, false, -1.0);
    CHECK(bin.surface.front()(0) == 1.0);
    CHECK(bin.surface.back()(0) == -1.0);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0.0, 0.0)) < 0.0);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0.95, 0.0)) < 0.0);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0.0, 0.8)) > 0.0);
    CHECK(nets::signed_label(bin, Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(-0.3461).epsilon(1e-3));
  }

  TEST_CASE("sparse xi bins are skipped with a warning") {
    std::vector<nets::SurfacePoint> s;
    for (int k = 0; k < 10; ++k) s.push_back({0.1 * k - 0.5, 0.5, 0.0});
    s.push_back({0.0, 0.6, 1.0});
    nets::YieldBox box;
    nets::YieldLabelConfig cfg;
    cfg.bins = 2;
    cfg.collocation_per_bin = 5;
    auto labels = nets::build_yield_labels(s, box, cfg, false);
    CHECK(labels.bins.size() == 1);
    CHECK(labels.warnings.size() == 1);
    CHECK(labels.size() == 15);
  }

  TEST_CASE("yield net learns the signed distance of a circle") {
    const double r = 0.5;
    auto labels = circle_labels(r, 48, 3000);
    nets::YieldNet net(5, labels.box);
    nets::NetTrainConfig cfg;
    cfg.epochs = 1000;
    cfg.batch = 100;
    cfg.seed = 2;
    cfg.validation_fraction = 0.0;
    auto h = net.train(labels, cfg, 1.0);
    CHECK(h.train.back() < h.train.front());
    CHECK(std::abs(net.value(0, 0, 0.2) + r) <= 0.1 * r);
    double worst = 0.0;
    for (int k = 0; k < 36; ++k) {
      const double a = 2 * M_PI * (k + 0.5) / 36;
      worst = std::max(worst, std::abs(net.value(r * std::cos(a), r * std::sin(a), 0.2)));
    }
    CHECK(worst <= 0.05 * r);
    CHECK(net.eikonal_residual({0.0, 0.2, 0.4}) <= 0.1);

    // Gradient against central differences.
    const double p = 0.3, q = -0.2, xi = 0.1, d = 1e-5;
    const Eigen::Vector3d g = net.gradient(p, q, xi);
    const double fp = (net.value(p + d, q, xi) - net.value(p - d, q, xi)) / (2 * d);
    const double fq = (net.value(p, q + d, xi) - net.value(p, q - d, xi)) / (2 * d);
    CHECK(std::abs(fp - g(0)) <= 1e-3 * g.head<2>().norm());
    CHECK(std::abs(fq - g(1)) <= 1e-3 * g.head<2>().norm());

    // A ray from the centre crosses the surface once.
    int flips = 0;
    double prev = net.value(0, 0, 0.2);
    for (int k = 1; k <= 100; ++k) {
      const double t = 0.95 * k / 100;
      const double v = net.value(t * std::cos(0.7), t * std::sin(0.7), 0.2);
      flips += (v > 0) != (prev > 0);
      prev = v;
    }
    CHECK(flips == 1);
    CHECK_FALSE(net.extrapolating(0.5, 0.5, 0.2));
    CHECK(net.extrapolating(5.0, 0.0, 0.2));

    auto back = nets::YieldNet::from_json(num::Json::parse(net.to_json().dump()));
    CHECK(back.value(0.1, 0.2, 0.3) == net.value(0.1, 0.2, 0.3));
  }

  TEST_CASE("plastic histories gate on plastic steps and pad with zeros") {
    auto rec = proportional_record(8, Vec3(1, -1, 0), 3);
    auto h = nets::plastic_histories(rec, 4);
    REQUIRE(h.size() == 8);
    CHECK(h[0] == Matrix::Zero(4, 3));
    CHECK(h[1] == Matrix::Zero(4, 3));
    CHECK(h[2].row(3)(0) == rec.steps[2].eps_p(0));
    CHECK(h[2].topRows(3) == Matrix::Zero(3, 3));
    CHECK(h[7].row(0)(0) == rec.steps[4].eps_p(0));
    rec.steps[5].plastic = false;
    auto g = nets::plastic_histories(rec, 4);
    CHECK(g[5] == g[4]);
  }

  TEST_CASE("kinetic net fits a history map and is deterministic") {
    std::mt19937_64 rng(9);
    const int n = 300, d = 3;
    std::vector<Matrix> hist;
    Matrix zeta(n, d);
    for (int k = 0; k < n; ++k) {
      Matrix h = testutil::random_matrix(4, 3, rng, -1e-3, 1e-3);
      if (k % 10 == 0) h.setZero();
      hist.push_back(h);
      zeta(k, 0) = 1.0 + 400.0 * h(3, 0);
      zeta(k, 1) = -0.5 + 300.0 * (h(3, 1) + h(2, 1));
      zeta(k, 2) = 200.0 * (h(3, 2) - h(0, 2));
    }
    nets::KineticNet net(1, d);
    nets::NetTrainConfig cfg;
    cfg.epochs = 150;
    cfg.batch = 32;
    cfg.seed = 4;
    auto h = net.train(hist, zeta, cfg);
    CHECK(h.train.back() < 0.2 * h.train.front());
    Matrix pred = net.predict_batch(hist);
    for (double r2 : nets::r2_per_column(zeta, pred)) CHECK(r2 >= 0.9);
    CHECK(net.predict(hist[3]) == net.predict(Matrix(hist[3])));
    CHECK(net.predict(Matrix::Zero(4, 3)) == net.predict(Matrix::Zero(4, 3)));
    CHECK_THROWS_AS(net.train(hist, Matrix::Zero(n, d + 1), cfg), ShapeError);
    auto back = nets::KineticNet::from_json(num::Json::parse(net.to_json().dump()));
    CHECK(back.predict(hist[5]) == net.predict(hist[5]));
  }

  TEST_CASE("flow targets are unit, trace-free principal components") {
    const Eigen::Vector3d g = nets::principal_flow_target(Vec3(2e-3, -2e-3, 0.0), Vec3(0.01, -0.01, 0.0));
    CHECK(std::abs(g(0) - 1 / std::sqrt(2.0)) <= 1e-12);
    CHECK(std::abs(g(1) + 1 / std::sqrt(2.0)) <= 1e-12);
    CHECK(std::abs(g(2)) <= 1e-12);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
      Matrix r = testutil::random_matrix(1, 6, rng);
      const Eigen::Vector3d t = nets::principal_flow_target(Vec3(r(0, 0), r(0, 1), r(0, 2)),
                                                           Vec3(r(0, 3), r(0, 4), r(0, 5)));
      CHECK(std::abs(t.norm() - 1.0) <= 1e-12);
      CHECK(std::abs(t.sum()) <= 1e-12);
    }
    CHECK_THROWS_AS(nets::principal_flow_target(Vec3::Zero(), Vec3(1, 0, 0)), DataError);
  }

  TEST_CASE("flow data skips elastic steps and the net fits directions") {
    auto rec = proportional_record(10, Vec3(1, -0.5, 0.2), 4);
    Matrix zeta(10, 2);
    for (int n = 0; n < 10; ++n) zeta.row(n) << 0.1 * std::max(0, n - 2), -0.05 * std::max(0, n - 2);
    auto data = nets::flow_data(rec, zeta, Matrix::Zero(1, 2));
    CHECK(data.dzeta.rows() == 7);
    CHECK(data.step.front() == 3);

    // Synthetic map from code increments to directions.
    std::mt19937_64 rng(2);
    nets::FlowData fd;
    fd.dzeta = testutil::random_matrix(400, 4, rng);
    fd.target.resize(400, 2);
    for (int r = 0; r < 400; ++r) {
      const double a = std::atan2(fd.dzeta(r, 1), fd.dzeta(r, 0));
      Eigen::Vector3d v(std::cos(a), 0.5 * std::sin(a), 0.0);
      v(2) = -(v(0) + v(1));
      v.normalize();
      fd.target.row(r) << v(0), v(1);
    }
    nets::FlowNet net(3, 4);
    nets::NetTrainConfig cfg;
    cfg.epochs = 150;
    cfg.batch = 50;
    auto h = net.train(fd, cfg);
    CHECK(h.train.back() < h.train.front());
    CHECK(nets::r2_pooled(fd.target, net.predict(fd.dzeta)) >= 0.95);
    CHECK(std::abs(net.direction(fd.dzeta.row(0)).norm() - 1.0) <= 1e-12);

    fd.dzeta.row(7).setZero();
    CHECK_THROWS_AS(net.train(fd, cfg), DataError);
    auto back = nets::FlowNet::from_json(num::Json::parse(net.to_json().dump()));
    CHECK(back.predict(fd.dzeta.topRows(3)) == net.predict(fd.dzeta.topRows(3)));
  }

  TEST_CASE("split and r2 helpers") {
    auto [tr, va] = nets::split_indices(100, 0.2, 5);
    CHECK(tr.size() == 80);
    CHECK(va.size() == 20);
    std::vector<int> all(tr);
    all.insert(all.end(), va.begin(), va.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 100; ++i) CHECK(all[i] == i);
    Matrix t(3, 1), p(3, 1);
    t << 1, 2, 3;
    p << 2, 2, 2;
    CHECK(nets::r2_per_column(t, t)[0] == 1.0);
    CHECK(nets::r2_per_column(t, p)[0] == doctest::Approx(0.0));
  }
}
