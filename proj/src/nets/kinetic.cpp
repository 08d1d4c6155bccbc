#include "plastigraph/nets/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "plastigraph/error.hpp"

namespace plastigraph::nets {

using num::Tape;
using num::Var;

std::vector<Matrix> plastic_histories(const fem::PathRecord& path, int length) {
  if (length < 1) throw ConfigError("history length must be positive");
  std::deque<fem::Vec3> window(length, fem::Vec3::Zero());
  std::vector<Matrix> out;
  for (const auto& st : path.steps) {
    if (st.plastic) {
      window.pop_front();
      window.push_back(st.eps_p);
    }
    Matrix h(length, 3);
    for (int k = 0; k < length; ++k) h.row(k) = window[k].transpose();
    out.push_back(std::move(h));
  }
  return out;
}

KineticNet::KineticNet(std::uint64_t seed, int d_enc, int history_length)
    : d_enc_(d_enc),
      length_(history_length),
      net_(3,
           {{"gru", 32, num::Activation::Tanh},
            {"gru", 32, num::Activation::Tanh},
            {"dense", 100, num::Activation::Relu},
            {"dense", 100, num::Activation::Relu},
            {"dense", d_enc, num::Activation::Linear}},
           num::InitScheme::GlorotUniform, seed),
      out_norm_(num::Affine::identity(static_cast<std::size_t>(d_enc))) {
  if (d_enc < 1 || history_length < 1) throw ConfigError("kinetic: sizes must be positive");
}

std::vector<Matrix> KineticNet::time_major(const std::vector<Matrix>& histories,
                                           const std::vector<int>& rows) const {
  std::vector<Matrix> steps(length_, Matrix(static_cast<Eigen::Index>(rows.size()), 3));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const Matrix& h = histories[rows[b]];
    if (h.rows() != length_ || h.cols() != 3) {
      throw ShapeError("kinetic: history must be " + std::to_string(length_) + " x 3");
    }
    const Matrix hn = in_norm_.apply(h);
    for (int t = 0; t < length_; ++t) steps[t].row(static_cast<Eigen::Index>(b)) = hn.row(t);
  }
  return steps;
}

Matrix KineticNet::predict_batch(const std::vector<Matrix>& histories) const {
  std::vector<int> rows(histories.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  return out_norm_.invert(net_.predict_sequence(time_major(histories, rows)));
}

Matrix KineticNet::predict(const Matrix& history) const { return predict_batch({history}); }

LossHistory KineticNet::train(const std::vector<Matrix>& histories, const Matrix& zeta,
                              const NetTrainConfig& cfg) {
  if (histories.empty() || static_cast<Eigen::Index>(histories.size()) != zeta.rows()) {
    throw DataError("train_kinetic: histories and targets differ in count");
  }
  if (zeta.cols() != d_enc_) {
    throw ShapeError("train_kinetic: targets have " + std::to_string(zeta.cols()) +
                     " components, model expects D_enc = " + std::to_string(d_enc_));
  }
  // Inputs scaled by their largest magnitude so the zero history stays at zero.
  Matrix all(static_cast<Eigen::Index>(histories.size()) * length_, 3);
  for (std::size_t i = 0; i < histories.size(); ++i) {
    all.middleRows(static_cast<Eigen::Index>(i) * length_, length_) = histories[i];
  }
  in_norm_ = num::Affine::identity(3);
  for (int c = 0; c < 3; ++c) {
    const double m = all.col(c).cwiseAbs().maxCoeff();
    in_norm_.scale[c] = m > 0.0 ? m : 1.0;
  }
  out_norm_ = num::Affine::fit_zscore(zeta, 1e-12);
  const Matrix zn = out_norm_.apply(zeta);

  auto [tr, va] = split_indices(static_cast<int>(histories.size()), cfg.validation_fraction,
                                num::mix_seed(cfg.seed, 29));
  auto state = num::OptimizerState::make(num::OptimizerKind::Nadam, net_.params(), cfg.learning_rate);
  auto loss_of = [&](Tape& t, const std::vector<Var>& pv, const std::vector<int>& rows) {
    std::vector<Var> seq;
    for (auto& m : time_major(histories, rows)) seq.push_back(t.constant(std::move(m)));
    Var out = net_.forward_sequence(t, pv, seq);
    return t.mean(t.square(t.sub(out, t.constant(take_rows(zn, rows)))));
  };
  auto step = [&](const std::vector<int>& batch) {
    std::vector<int> rows(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) rows[i] = tr[batch[i]];
    Tape t;
    auto pv = t.parameters(net_.params());
    Var l = loss_of(t, pv, rows);
    const double v = t.scalar(l);
    if (std::isfinite(v)) num::optimizer_step(state, net_.params(), t.grad_params(l));
    return v;
  };
  auto validate = [&]() {
    if (va.empty()) return -1.0;
    Tape t;
    auto pv = t.parameters(net_.params());
    return t.scalar(loss_of(t, pv, va));
  };
  return run_epochs(static_cast<int>(tr.size()), cfg, "train-kinetic", step, validate);
}

num::Json KineticNet::to_json() const {
  num::Json doc = num::model_document("kinetic", net_,
                                      {{"inputs", in_norm_.to_json()}, {"outputs", out_norm_.to_json()}});
  doc["history_length"] = length_;
  doc["D_enc"] = d_enc_;
  return doc;
}

KineticNet KineticNet::from_json(const num::Json& doc) {
  KineticNet k;
  k.net_ = num::sequential_from_document(doc, "kinetic");
  k.length_ = doc.at("history_length").get<int>();
  k.d_enc_ = doc.at("D_enc").get<int>();
  k.in_norm_ = num::Affine::from_json(doc.at("normalization").at("inputs"));
  k.out_norm_ = num::Affine::from_json(doc.at("normalization").at("outputs"));
  return k;
}

}  // namespace plastigraph::nets
