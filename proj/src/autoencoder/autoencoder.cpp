#include "plastigraph/autoencoder/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "plastigraph/error.hpp"
#include "plastigraph/numcore/init.hpp"
#include "plastigraph/numcore/optim.hpp"

namespace plastigraph::ae {

using num::Tape;
using num::Var;

Matrix gin_forward(const num::Adjacency& adj, const Matrix& x, const Matrix& w, const Matrix& b,
                   bool relu) {
  if (x.cols() != w.rows() || b.cols() != w.cols()) throw ShapeError("gin_forward: shape mismatch");
  Matrix y = num::aggregate_neighbors(adj, x) * w;
  y.rowwise() += b.row(0);
  if (relu) y = y.cwiseMax(0.0);
  return y;
}

Matrix global_average_pool(const Matrix& x) {
  if (x.rows() < 1) throw ShapeError("global_average_pool: empty input");
  return x.colwise().mean();
}

std::string adjacency_checksum(const mesh::PlasticityGraph& graph) {
  std::string bytes = std::to_string(graph.num_nodes()) + ":";
  for (const auto& e : graph.edges) bytes += std::to_string(e[0]) + "-" + std::to_string(e[1]) + ",";
  return num::fnv1a_hex(bytes);
}

GraphAutoencoder::GraphAutoencoder(const mesh::PlasticityGraph& graph, int d_enc,
                                   std::uint64_t seed, int hidden, double gin_eps)
    : n_(graph.num_nodes()),
      d_enc_(d_enc),
      hidden_(hidden),
      gin_eps_(gin_eps),
      seed_(seed),
      adj_(std::make_shared<num::Adjacency>(graph.adjacency(gin_eps))),
      adjacency_checksum_(adjacency_checksum(graph)),
      coords_(graph.features.leftCols(2)) {
  if (d_enc < 1 || hidden < 1 || n_ < 1) throw ConfigError("autoencoder: sizes must be positive");
  coord_norm_ = num::Affine::fit_range(coords_, 0.0, 1.0);
  plastic_norm_ = num::Affine::identity(3);
  num::Rng rng(seed);
  auto add_dense = [&](const std::string& name, int in, int out) {
    params_.add(name + ".W", num::he_normal(in, out, rng));
    params_.add(name + ".b", Matrix::Zero(1, out));
  };
  add_dense("enc.gin", mesh::kNodeFeatures, hidden);
  add_dense("enc.dense", hidden, hidden);
  add_dense("enc.out", hidden, d_enc);
  add_dense("dec.dense", d_enc, n_ * d_enc);
  add_dense("dec.gin", d_enc, mesh::kNodeFeatures);
}

void GraphAutoencoder::fit_normalization(const std::vector<Matrix>& snapshots) {
  if (snapshots.empty()) throw DataError("autoencoder: no snapshots");
  Matrix all(static_cast<Eigen::Index>(snapshots.size()) * n_, 3);
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    if (snapshots[s].rows() != n_ || snapshots[s].cols() != 3) {
      throw ShapeError("autoencoder: snapshot is not N x 3");
    }
    all.middleRows(static_cast<Eigen::Index>(s) * n_, n_) = snapshots[s];
  }
  plastic_norm_ = num::Affine::fit_zscore(all, 1e-12);
}

GraphAutoencoder::Batch GraphAutoencoder::make_batch(const std::vector<const Matrix*>& plastic) const {
  const int b = static_cast<int>(plastic.size());
  Batch out;
  Matrix feats(static_cast<Eigen::Index>(b) * n_, mesh::kNodeFeatures);
  const Matrix cn = coord_norm_.apply(coords_);
  for (int i = 0; i < b; ++i) {
    if (plastic[i]->rows() != n_ || plastic[i]->cols() != 3) {
      throw ShapeError("autoencoder: expected " + std::to_string(n_) + " x 3 plastic strains");
    }
    feats.block(static_cast<Eigen::Index>(i) * n_, 0, n_, 2) = cn;
    feats.block(static_cast<Eigen::Index>(i) * n_, 2, n_, 3) = plastic_norm_.apply(*plastic[i]);
  }
  out.target = feats.rightCols(3);
  out.aggregated = num::aggregate_neighbors(*adj_, feats);
  return out;
}

Var GraphAutoencoder::encode_vars(Tape& t, const std::vector<Var>& pv, Var agg, int /*b*/) const {
  Var h = t.relu(t.add_row(t.matmul(agg, pv[0]), pv[1]));
  Var g = t.scale(t.segment_sum(h, n_), 1.0 / n_);
  g = t.relu(t.add_row(t.matmul(g, pv[2]), pv[3]));
  return t.add_row(t.matmul(g, pv[4]), pv[5]);
}

Var GraphAutoencoder::decode_vars(Tape& t, const std::vector<Var>& pv, Var z, int b) const {
  Var d = t.relu(t.add_row(t.matmul(z, pv[6]), pv[7]));
  Var r = t.reshape(d, b * n_, d_enc_);
  Var a = t.aggregate(r, adj_);
  return t.add_row(t.matmul(a, pv[8]), pv[9]);
}

Var GraphAutoencoder::batch_loss(Tape& t, const std::vector<Var>& pv, const Batch& batch,
                                 int b) const {
  Var z = encode_vars(t, pv, t.constant(batch.aggregated), b);
  Var x = decode_vars(t, pv, z, b);
  Var diff = t.sub(t.slice_cols(x, 2, 3), t.constant(batch.target));
  return t.scale(t.sum(t.square(diff)), 1.0 / (static_cast<double>(b) * n_));
}

Matrix GraphAutoencoder::encode_batch(const std::vector<Matrix>& plastic) const {
  std::vector<const Matrix*> ptrs;
  for (const auto& p : plastic) ptrs.push_back(&p);
  Batch batch = make_batch(ptrs);
  Tape t;
  auto pv = t.parameters(params_);
  return t.value(encode_vars(t, pv, t.constant(batch.aggregated), static_cast<int>(ptrs.size())));
}

Matrix GraphAutoencoder::encode(const Matrix& plastic) const {
  if (plastic.rows() != n_) {
    throw ShapeError("encode: graph has " + std::to_string(plastic.rows()) +
                     " nodes, model expects " + std::to_string(n_));
  }
  return encode_batch({plastic});
}

Matrix GraphAutoencoder::decode(const Matrix& zeta) const {
  if (zeta.rows() != 1 || zeta.cols() != d_enc_) throw ShapeError("decode: zeta must be 1 x D_enc");
  Tape t;
  auto pv = t.parameters(params_);
  Matrix xn = t.value(decode_vars(t, pv, t.constant(zeta), 1));
  Matrix out(n_, mesh::kNodeFeatures);
  out.leftCols(2) = coord_norm_.invert(xn.leftCols(2));
  out.rightCols(3) = plastic_norm_.invert(xn.rightCols(3));
  return out;
}

Matrix GraphAutoencoder::decode_plastic(const Matrix& zeta) const { return decode(zeta).rightCols(3); }

double GraphAutoencoder::loss(const std::vector<Matrix>& snapshots) const {
  double total = 0.0;
  const std::size_t chunk = 50;
  for (std::size_t s = 0; s < snapshots.size(); s += chunk) {
    std::vector<const Matrix*> ptrs;
    for (std::size_t k = s; k < std::min(snapshots.size(), s + chunk); ++k) ptrs.push_back(&snapshots[k]);
    Batch batch = make_batch(ptrs);
    Tape t;
    auto pv = t.parameters(params_);
    total += t.scalar(batch_loss(t, pv, batch, static_cast<int>(ptrs.size()))) * ptrs.size();
  }
  return total / static_cast<double>(snapshots.size());
}

TrainHistory GraphAutoencoder::train(const std::vector<Matrix>& snapshots, const TrainConfig& cfg) {
  if (snapshots.empty()) throw DataError("train_autoencoder: empty dataset");
  if (cfg.batch < 1 || cfg.epochs < 0) throw ConfigError("train_autoencoder: bad batch/epochs");
  fit_normalization(snapshots);
  // Aggregation is parameter-free, so each snapshot's (A + I) X is computed once.
  std::vector<Batch> single;
  single.reserve(snapshots.size());
  for (const auto& s : snapshots) single.push_back(make_batch({&s}));

  auto opt = num::OptimizerState::make(num::OptimizerKind::Adam, params_, cfg.learning_rate);
  std::vector<std::size_t> order(snapshots.size());
  TrainHistory hist;
  num::Rng rng(cfg.seed);
  std::vector<double> best_params;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const int b = static_cast<int>(end - start);
      Batch batch;
      batch.aggregated.resize(static_cast<Eigen::Index>(b) * n_, mesh::kNodeFeatures);
      batch.target.resize(static_cast<Eigen::Index>(b) * n_, 3);
      for (int i = 0; i < b; ++i) {
        const Batch& s = single[order[start + i]];
        batch.aggregated.middleRows(static_cast<Eigen::Index>(i) * n_, n_) = s.aggregated;
        batch.target.middleRows(static_cast<Eigen::Index>(i) * n_, n_) = s.target;
      }
      Tape t;
      auto pv = t.parameters(params_);
      Var l = batch_loss(t, pv, batch, b);
      const double lv = t.scalar(l);
      if (!std::isfinite(lv)) {
        throw NumericalError("autoencoder training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += lv * b;
      num::adam_step(opt, params_, t.grad_params(l));
    }
    hist.loss.push_back(epoch_loss / static_cast<double>(order.size()));
    // Adam occasionally spikes late in training; remember the best epoch.
    if (hist.loss.back() < best_loss) {
      best_loss = hist.loss.back();
      hist.best_epoch = epoch;
      if (cfg.restore_best) best_params = params_.flatten();
    }
    if (cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0) {
      std::fprintf(stderr, "[train-ae] epoch %d loss %.6g\n", epoch + 1, hist.loss.back());
    }
  }
  if (cfg.restore_best && !best_params.empty()) params_.unflatten(best_params);
  return hist;
}

num::Json GraphAutoencoder::to_json() const {
  return {{"kind", "autoencoder"},
          {"architecture",
           {{"N", n_}, {"D_node", mesh::kNodeFeatures}, {"D_enc", d_enc_}, {"hidden", hidden_},
            {"gin_eps", gin_eps_}}},
          {"seed", seed_},
          {"params", num::params_to_json(params_)},
          {"normalization", {{"coords", coord_norm_.to_json()}, {"plastic", plastic_norm_.to_json()}}},
          {"adjacency_checksum", adjacency_checksum_}};
}

GraphAutoencoder GraphAutoencoder::from_json(const num::Json& doc, const mesh::PlasticityGraph& graph) {
  if (doc.at("kind") != "autoencoder") throw ArtifactError("model file is not an autoencoder");
  const auto& a = doc.at("architecture");
  if (a.at("N").get<int>() != graph.num_nodes()) {
    throw ArtifactError("autoencoder was trained on a different mesh (node count)");
  }
  if (doc.at("adjacency_checksum").get<std::string>() != adjacency_checksum(graph)) {
    throw ArtifactError("autoencoder was trained on a different mesh (adjacency)");
  }
  GraphAutoencoder m(graph, a.at("D_enc").get<int>(), doc.at("seed").get<std::uint64_t>(),
                     a.at("hidden").get<int>(), a.at("gin_eps").get<double>());
  num::params_from_json(doc.at("params"), m.params_);
  m.coord_norm_ = num::Affine::from_json(doc.at("normalization").at("coords"));
  m.plastic_norm_ = num::Affine::from_json(doc.at("normalization").at("plastic"));
  return m;
}

double plastic_r2(const std::vector<Matrix>& truth, const std::vector<Matrix>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw ShapeError("plastic_r2: size mismatch");
  Eigen::RowVector3d mean = Eigen::RowVector3d::Zero();
  double count = 0.0;
  for (const auto& t : truth) {
    mean += t.colwise().sum();
    count += static_cast<double>(t.rows());
  }
  mean /= count;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    ss_res += (truth[s] - predicted[s]).squaredNorm();
    ss_tot += (truth[s].rowwise() - mean).squaredNorm();
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

}  // namespace plastigraph::ae
