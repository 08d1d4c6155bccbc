#include "plastigraph/nets/flow.hpp"

#include <cmath>

#include "plastigraph/error.hpp"
#include "plastigraph/returnmap/spectral.hpp"

namespace plastigraph::nets {

using num::Tape;
using num::Var;

Eigen::Vector3d principal_flow_target(const fem::Vec3& d_eps_p, const fem::Vec3& eps_e) {
  const Eigen::Vector2d g = rm::spectral_decompose(eps_e).project(d_eps_p);
  Eigen::Vector3d out(g(0), g(1), -(g(0) + g(1)));
  const double n = out.norm();
  if (!(n > 0.0)) throw DataError("flow target from a zero plastic increment");
  return out / n;
}

FlowData flow_data(const fem::PathRecord& path, const Matrix& zeta, const Matrix& zeta0,
                   double min_increment) {
  if (zeta.rows() != path.num_steps()) throw ShapeError("flow_data: one code per step expected");
  if (zeta0.rows() != 1 || zeta0.cols() != zeta.cols()) throw ShapeError("flow_data: bad reference code");
  FlowData d;
  std::vector<Eigen::Index> keep;
  fem::Vec3 prev = fem::Vec3::Zero();
  for (int n = 0; n < path.num_steps(); ++n) {
    const auto& st = path.steps[n];
    const fem::Vec3 inc = st.eps_p - prev;
    prev = st.eps_p;
    if (st.plastic && inc.norm() > min_increment) keep.push_back(n);
  }
  const auto rows = static_cast<Eigen::Index>(keep.size());
  d.dzeta.resize(rows, zeta.cols());
  d.target.resize(rows, 2);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index n = keep[r];
    const auto& st = path.steps[n];
    const fem::Vec3 before = n > 0 ? path.steps[n - 1].eps_p : fem::Vec3::Zero();
    d.dzeta.row(r) = zeta.row(n) - (n > 0 ? Matrix(zeta.row(n - 1)) : zeta0);
    const Eigen::Vector3d g = principal_flow_target(st.eps_p - before, st.eps_e());
    d.target(r, 0) = g(0);
    d.target(r, 1) = g(1);
    d.step.push_back(static_cast<int>(n));
  }
  return d;
}

void append(FlowData& into, const FlowData& more) {
  if (into.dzeta.size() == 0) {
    into = more;
    return;
  }
  if (more.dzeta.rows() == 0) return;
  if (into.dzeta.cols() != more.dzeta.cols()) throw ShapeError("flow data: code width differs");
  Matrix dz(into.dzeta.rows() + more.dzeta.rows(), into.dzeta.cols());
  dz << into.dzeta, more.dzeta;
  Matrix tg(into.target.rows() + more.target.rows(), 2);
  tg << into.target, more.target;
  into.dzeta = std::move(dz);
  into.target = std::move(tg);
  into.step.insert(into.step.end(), more.step.begin(), more.step.end());
}

FlowNet::FlowNet(std::uint64_t seed, int d_enc)
    : d_enc_(d_enc),
      net_(d_enc,
           {{"dense", 100, num::Activation::Relu},
            {"dense", 100, num::Activation::Relu},
            {"dense", 100, num::Activation::Relu},
            {"dense", 100, num::Activation::Relu},
            {"dense", 2, num::Activation::Linear}},
           num::InitScheme::GlorotUniform, seed),
      in_norm_(num::Affine::identity(static_cast<std::size_t>(d_enc))) {}

Matrix FlowNet::predict(const Matrix& dzeta) const {
  if (dzeta.cols() != d_enc_) throw ShapeError("flow: expected D_enc = " + std::to_string(d_enc_));
  return net_.predict(in_norm_.apply(dzeta));
}

Eigen::Vector3d FlowNet::direction(const Matrix& dzeta) const {
  const Matrix g = predict(dzeta);
  Eigen::Vector3d v(g(0, 0), g(0, 1), -(g(0, 0) + g(0, 1)));
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector3d(v / n) : v;
}

LossHistory FlowNet::train(const FlowData& data, const NetTrainConfig& cfg) {
  const auto n = static_cast<int>(data.dzeta.rows());
  if (n == 0 || data.target.rows() != n) throw DataError("train_flow: empty or inconsistent data");
  if (data.dzeta.cols() != d_enc_) throw ShapeError("train_flow: code width differs from D_enc");
  for (int r = 0; r < n; ++r) {
    if (data.dzeta.row(r).cwiseAbs().maxCoeff() == 0.0) {
      throw DataError("train_flow: row " + std::to_string(r) + " has a zero code increment (elastic step)");
    }
  }
  // Scale only, so a zero increment stays at the origin.
  in_norm_ = num::Affine::identity(static_cast<std::size_t>(d_enc_));
  for (int c = 0; c < d_enc_; ++c) {
    const double rms = std::sqrt(data.dzeta.col(c).squaredNorm() / n);
    in_norm_.scale[c] = rms > 1e-14 ? rms : 1.0;
  }
  const Matrix x = in_norm_.apply(data.dzeta);
  auto [tr, va] = split_indices(n, cfg.validation_fraction, num::mix_seed(cfg.seed, 31));
  const Matrix x_tr = take_rows(x, tr), y_tr = take_rows(data.target, tr);
  const Matrix x_va = take_rows(x, va), y_va = take_rows(data.target, va);
  auto state = num::OptimizerState::make(num::OptimizerKind::Nadam, net_.params(), cfg.learning_rate);
  auto loss_of = [&](Tape& t, const std::vector<Var>& pv, const Matrix& xb, const Matrix& yb) {
    return t.mean(t.square(t.sub(net_.forward(t, pv, t.constant(xb)), t.constant(yb))));
  };
  auto step = [&](const std::vector<int>& rows) {
    Tape t;
    auto pv = t.parameters(net_.params());
    Var l = loss_of(t, pv, take_rows(x_tr, rows), take_rows(y_tr, rows));
    const double v = t.scalar(l);
    if (std::isfinite(v)) num::optimizer_step(state, net_.params(), t.grad_params(l));
    return v;
  };
  auto validate = [&]() {
    if (va.empty()) return -1.0;
    Tape t;
    auto pv = t.parameters(net_.params());
    return t.scalar(loss_of(t, pv, x_va, y_va));
  };
  return run_epochs(static_cast<int>(tr.size()), cfg, "train-flow", step, validate);
}

num::Json FlowNet::to_json() const {
  num::Json doc = num::model_document("flow", net_, {{"inputs", in_norm_.to_json()}});
  doc["D_enc"] = d_enc_;
  return doc;
}

FlowNet FlowNet::from_json(const num::Json& doc) {
  FlowNet f;
  f.net_ = num::sequential_from_document(doc, "flow");
  f.d_enc_ = doc.at("D_enc").get<int>();
  f.in_norm_ = num::Affine::from_json(doc.at("normalization").at("inputs"));
  return f;
}

}  // namespace plastigraph::nets
