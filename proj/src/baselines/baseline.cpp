#include "plastigraph/baselines/baseline.hpp"

#include <cmath>
#include <fstream>

#include "plastigraph/error.hpp"
#include "plastigraph/numcore/init.hpp"

namespace plastigraph::baselines {

using num::Tape;
using num::Var;

Matrix strain_window(const Series& s, int k, int length) {
  if (k < 0 || k >= s.rows()) throw ShapeError("strain_window: row out of range");
  Matrix w = Matrix::Zero(length, 3);
  for (int j = 0; j < length; ++j) {
    const int row = k - (length - 1 - j);
    if (row >= 0) w.row(j) = s.eps[row].transpose();
  }
  return w;
}

BaselineGru::BaselineGru(std::uint64_t seed, int window)
    : window_(window),
      net_(3,
           {{"gru", 32, num::Activation::Tanh},
            {"gru", 32, num::Activation::Tanh},
            {"dense", 100, num::Activation::Relu},
            {"dense", 100, num::Activation::Relu},
            {"dense", 2, num::Activation::Linear}},
           num::InitScheme::GlorotUniform, seed) {
  if (window < 1) throw ConfigError("baseline: window must be positive");
}

std::vector<Matrix> BaselineGru::time_major(const std::vector<Matrix>& windows,
                                            const std::vector<int>& rows) const {
  std::vector<Matrix> steps(window_, Matrix(static_cast<Eigen::Index>(rows.size()), 3));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    const Matrix& w = windows[rows[b]];
    if (w.rows() != window_ || w.cols() != 3) {
      throw ShapeError("baseline: window must be " + std::to_string(window_) + " x 3");
    }
    const Matrix wn = in_norm_.apply(w);
    for (int t = 0; t < window_; ++t) steps[t].row(static_cast<Eigen::Index>(b)) = wn.row(t);
  }
  return steps;
}

Matrix BaselineGru::predict_batch(const std::vector<Matrix>& windows) const {
  std::vector<int> rows(windows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
  return out_norm_.invert(net_.predict_sequence(time_major(windows, rows)));
}

Matrix BaselineGru::predict(const Matrix& window) const { return predict_batch({window}); }

Matrix BaselineGru::predict_series(const Series& s) const {
  // One window at a time: batched products may round differently, and each
  // prediction must depend on its window alone.
  Matrix out(s.rows(), 2);
  for (int k = 0; k < s.rows(); ++k) out.row(k) = predict(strain_window(s, k, window_));
  return out;
}

nets::LossHistory BaselineGru::train(const std::vector<Series>& series, const nets::NetTrainConfig& cfg) {
  std::vector<Matrix> windows;
  int n = 0;
  for (const auto& s : series) n += s.rows();
  if (n == 0) throw DataError("train_baseline: no samples");
  Matrix target(n, 2), all(n, 3);
  for (const auto& s : series) {
    if (s.pq.rows() != s.rows() || s.pq.cols() != 2) throw ShapeError("train_baseline: series targets must be rows x 2");
    for (int k = 0; k < s.rows(); ++k) {
      const auto r = static_cast<Eigen::Index>(windows.size());
      target.row(r) = s.pq.row(k);
      all.row(r) = s.eps[k].transpose();
      windows.push_back(strain_window(s, k, window_));
    }
  }
  // Strains scaled by their largest magnitude so the padding stays at zero.
  in_norm_ = num::Affine::identity(3);
  for (int c = 0; c < 3; ++c) {
    const double m = all.col(c).cwiseAbs().maxCoeff();
    in_norm_.scale[c] = m > 0.0 ? m : 1.0;
  }
  out_norm_ = num::Affine::fit_zscore(target, 1e-12);
  const Matrix tn = out_norm_.apply(target);

  auto [tr, va] = nets::split_indices(n, cfg.validation_fraction, num::mix_seed(cfg.seed, 31));
  auto state = num::OptimizerState::make(num::OptimizerKind::Nadam, net_.params(), cfg.learning_rate);
  auto loss_of = [&](Tape& t, const std::vector<Var>& pv, const std::vector<int>& rows) {
    std::vector<Var> seq;
    for (auto& m : time_major(windows, rows)) seq.push_back(t.constant(std::move(m)));
    Var out = net_.forward_sequence(t, pv, seq);
    return t.mean(t.square(t.sub(out, t.constant(nets::take_rows(tn, rows)))));
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
  return nets::run_epochs(static_cast<int>(tr.size()), cfg, "train-baseline", step, validate);
}

num::Json BaselineGru::to_json() const {
  num::Json doc = num::model_document("baseline", net_,
                                      {{"inputs", in_norm_.to_json()}, {"outputs", out_norm_.to_json()}});
  doc["window"] = window_;
  return doc;
}

BaselineGru BaselineGru::from_json(const num::Json& doc) {
  BaselineGru b;
  b.net_ = num::sequential_from_document(doc, "baseline");
  b.window_ = doc.at("window").get<int>();
  b.in_norm_ = num::Affine::from_json(doc.at("normalization").at("inputs"));
  b.out_norm_ = num::Affine::from_json(doc.at("normalization").at("outputs"));
  return b;
}

double rmse_q(const Matrix& truth, const Matrix& pred) {
  if (truth.rows() != pred.rows() || truth.cols() < 2 || pred.cols() < 2 || truth.rows() == 0) {
    throw ShapeError("rmse_q: shape mismatch");
  }
  return std::sqrt((truth.col(1) - pred.col(1)).squaredNorm() / static_cast<double>(truth.rows()));
}

double peak_q(const Matrix& truth) {
  if (truth.rows() == 0 || truth.cols() < 2) throw ShapeError("peak_q: empty series");
  return truth.col(1).maxCoeff();
}

void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << "path,tag,peak_q,rmse_return_map,rmse_baseline,rmse_baseline_augmented\n";
  for (const auto& r : rows) {
    out << r.path << ',' << r.tag << ',' << fem::format_double(r.peak_q) << ','
        << fem::format_double(r.rmse_return_map) << ',' << fem::format_double(r.rmse_baseline) << ','
        << fem::format_double(r.rmse_baseline_augmented) << '\n';
  }
}

}  // namespace plastigraph::baselines
