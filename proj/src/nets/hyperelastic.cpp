#include "plastigraph/nets/hyperelastic.hpp"

#include <algorithm>
#include <cmath>

#include "plastigraph/error.hpp"

namespace plastigraph::nets {

using num::Tape;
using num::Var;

Vec3 shifted_strain(const Vec3& eps_e, double eps_e33, double nu) {
  return eps_e + nu * eps_e33 * Vec3(1.0, 1.0, 0.0);
}

double energy_target(const ElasticSample& s, double nu) {
  const Vec3 e = shifted_strain(s.eps_e, s.eps_e33, nu);
  return 0.5 * (s.sigma(0) * e(0) + s.sigma(1) * e(1) + 2.0 * s.sigma(2) * e(2));
}

std::vector<ElasticSample> elastic_samples(const std::vector<fem::PathRecord>& paths) {
  std::vector<ElasticSample> out;
  out.push_back(ElasticSample{});
  for (const auto& path : paths) {
    for (const auto& st : path.steps) {
      ElasticSample s;
      s.eps_e = st.eps_e();
      s.eps_e33 = st.eps_p(0) + st.eps_p(1);
      s.sigma = st.sigma;
      s.sigma33 = st.sigma33;
      out.push_back(s);
    }
  }
  return out;
}

HyperelasticNet::HyperelasticNet(std::uint64_t seed, double youngs, double nu, int width)
    : youngs_(youngs),
      nu_(nu),
      net_(3,
           {{"dense", width, num::Activation::Relu},
            {"multiply", 0, num::Activation::Linear},
            {"dense", width, num::Activation::Relu},
            {"dense", 1, num::Activation::Linear}},
           num::InitScheme::GlorotUniform, seed) {
  if (!(youngs > 0.0) || !(nu > -1.0 && nu < 0.5)) throw ConfigError("hyperelastic: bad E or nu");
}

namespace {

Matrix row_of(const Vec3& e, const std::array<double, 3>& scale) {
  Matrix x(1, 3);
  for (int i = 0; i < 3; ++i) x(0, i) = e(i) / scale[i];
  return x;
}

}  // namespace

double HyperelasticNet::energy(const Vec3& e_tilde) const {
  return energy_scale_ * net_.predict(row_of(e_tilde, in_scale_))(0, 0);
}

Vec3 HyperelasticNet::gradient(const Vec3& e_tilde) const {
  Tape t;
  auto pv = t.parameters(net_.params());
  Var x = t.input(row_of(e_tilde, in_scale_));
  Var f = net_.forward(t, pv, x);
  const Matrix g = t.grad_input(f, x);
  Vec3 out;
  for (int i = 0; i < 3; ++i) out(i) = energy_scale_ * g(0, i) / in_scale_[i];
  return out;
}

Mat3 HyperelasticNet::hessian(const Vec3& e_tilde) const {
  Tape t;
  auto pv = t.parameters(net_.params());
  Var x = t.input(row_of(e_tilde, in_scale_));
  Var f = net_.forward(t, pv, x);
  Var gx = t.gradients(f, std::span<const Var>(&x, 1))[0];
  Mat3 h;
  for (int i = 0; i < 3; ++i) {
    const Matrix row = t.grad_input(t.slice_cols(gx, i, 1), x);
    for (int j = 0; j < 3; ++j) h(i, j) = energy_scale_ * row(0, j) / (in_scale_[i] * in_scale_[j]);
  }
  return h;
}

void HyperelasticNet::stress(const Vec3& eps_e, double eps_e33, Vec3& sigma, double& sigma33) const {
  const Vec3 g = gradient(shifted_strain(eps_e, eps_e33, nu_));
  sigma = Vec3(g(0), g(1), 0.5 * g(2));
  sigma33 = nu_ * (sigma(0) + sigma(1)) + youngs_ * eps_e33;
}

Matrix HyperelasticNet::normalized_inputs(const std::vector<ElasticSample>& s) const {
  Matrix x(static_cast<Eigen::Index>(s.size()), 3);
  for (std::size_t k = 0; k < s.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = row_of(shifted_strain(s[k].eps_e, s[k].eps_e33, nu_), in_scale_);
  }
  return x;
}

namespace {

struct Targets {
  Matrix energy;  // B x 1
  Matrix grad;    // B x 3
};

// Loss on one batch recorded on `t`; returns the scalar Var.
Var sobolev_loss(Tape& t, const num::Sequential& net, const std::vector<Var>& pv, const Matrix& xin,
                 const Targets& y, const HyperelasticTrainOptions& opt, const Matrix& stiffness_n) {
  Var x = t.input(xin);
  Var f = net.forward(t, pv, x);
  Var loss = t.mean(t.square(t.sub(f, t.constant(y.energy))));
  Var gx = t.gradients(t.sum(f), std::span<const Var>(&x, 1))[0];
  if (opt.stress_weight > 0.0) {
    Var gl = t.mean(t.square(t.sub(gx, t.constant(y.grad))));
    loss = t.add(loss, t.scale(gl, opt.stress_weight));
  }
  if (opt.stiffness_weight > 0.0) {
    for (int i = 0; i < 3; ++i) {
      Var hi = t.gradients(t.sum(t.slice_cols(gx, i, 1)), std::span<const Var>(&x, 1))[0];
      Matrix target = Matrix::Ones(xin.rows(), 1) * stiffness_n.row(i);
      Var hl = t.mean(t.square(t.sub(hi, t.constant(target))));
      loss = t.add(loss, t.scale(hl, opt.stiffness_weight / 3.0));
    }
  }
  return loss;
}

}  // namespace

LossHistory HyperelasticNet::train(const std::vector<ElasticSample>& train_set,
                                   const std::vector<ElasticSample>& validation_set,
                                   const NetTrainConfig& cfg, const HyperelasticTrainOptions& opt) {
  if (train_set.empty()) throw DataError("train_hyperelastic: empty training set");
  in_scale_ = {0.0, 0.0, 0.0};
  energy_scale_ = 0.0;
  for (const auto& s : train_set) {
    const Vec3 e = shifted_strain(s.eps_e, s.eps_e33, nu_);
    for (int i = 0; i < 3; ++i) in_scale_[i] = std::max(in_scale_[i], std::abs(e(i)));
    energy_scale_ = std::max(energy_scale_, std::abs(energy_target(s, nu_)));
  }
  for (double& s : in_scale_) s = s > 1e-14 ? s : 1.0;
  if (!(energy_scale_ > 0.0)) energy_scale_ = 1.0;

  auto targets = [&](const std::vector<ElasticSample>& s) {
    Targets y{Matrix(static_cast<Eigen::Index>(s.size()), 1), Matrix(static_cast<Eigen::Index>(s.size()), 3)};
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      y.energy(r, 0) = energy_target(s[k], nu_) / energy_scale_;
      const Vec3 g(s[k].sigma(0), s[k].sigma(1), 2.0 * s[k].sigma(2));
      for (int i = 0; i < 3; ++i) y.grad(r, i) = g(i) * in_scale_[i] / energy_scale_;
    }
    return y;
  };
  Matrix stiffness_n = Matrix::Zero(3, 3);
  if (opt.stiffness_weight > 0.0) {
    const auto& m = opt.stiffness_reference;
    const double lam = m.lame_lambda(), mu = m.shear_modulus();
    Mat3 c;
    c << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, 4 * mu;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) stiffness_n(i, j) = c(i, j) * in_scale_[i] * in_scale_[j] / energy_scale_;
    }
  }

  const Matrix x_all = normalized_inputs(train_set);
  const Targets y_all = targets(train_set);
  const Matrix x_val = normalized_inputs(validation_set);
  const Targets y_val = targets(validation_set);
  auto state = num::OptimizerState::make(num::OptimizerKind::Nadam, net_.params(), cfg.learning_rate);

  auto step = [&](const std::vector<int>& rows) {
    Targets y{take_rows(y_all.energy, rows), take_rows(y_all.grad, rows)};
    Tape t;
    auto pv = t.parameters(net_.params());
    Var l = sobolev_loss(t, net_, pv, take_rows(x_all, rows), y, opt, stiffness_n);
    const double v = t.scalar(l);
    if (std::isfinite(v)) num::optimizer_step(state, net_.params(), t.grad_params(l));
    return v;
  };
  auto validate = [&]() {
    if (validation_set.empty()) return -1.0;
    Tape t;
    auto pv = t.parameters(net_.params());
    return t.scalar(sobolev_loss(t, net_, pv, x_val, y_val, opt, stiffness_n));
  };
  return run_epochs(static_cast<int>(train_set.size()), cfg, "train-hyperelastic", step, validate);
}

num::Json HyperelasticNet::to_json() const {
  num::Json norm{{"strain_scale", in_scale_}, {"energy_scale", energy_scale_}};
  num::Json doc = num::model_document("hyperelastic", net_, norm);
  doc["material"] = {{"E", youngs_}, {"nu", nu_}};
  return doc;
}

HyperelasticNet HyperelasticNet::from_json(const num::Json& doc) {
  HyperelasticNet h;
  h.net_ = num::sequential_from_document(doc, "hyperelastic");
  h.youngs_ = doc.at("material").at("E").get<double>();
  h.nu_ = doc.at("material").at("nu").get<double>();
  h.in_scale_ = doc.at("normalization").at("strain_scale").get<std::array<double, 3>>();
  h.energy_scale_ = doc.at("normalization").at("energy_scale").get<double>();
  return h;
}

}  // namespace plastigraph::nets
