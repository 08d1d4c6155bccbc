#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "plastigraph/mesh/graph.hpp"
#include "plastigraph/numcore/params.hpp"
#include "plastigraph/numcore/serialize.hpp"
#include "plastigraph/numcore/tape.hpp"

namespace plastigraph::ae {

using num::Matrix;

/// X' = act((A + (1 + eps) I) X W + b), the single-dense-map GIN layer.
Matrix gin_forward(const num::Adjacency& adj, const Matrix& x, const Matrix& w, const Matrix& b,
                   bool relu);
/// Column means.
Matrix global_average_pool(const Matrix& x);

struct TrainConfig {
  int epochs = 2000;
  int batch = 20;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int log_every = 0;  // 0: silent
  bool restore_best = true;  // keep the parameters of the lowest-loss epoch
};

struct TrainHistory {
  std::vector<double> loss;  // per epoch, mean over snapshots
  int best_epoch = -1;
};

/// Encoder: GIN(64, relu) -> mean pool -> dense(64, relu) -> dense(D_enc).
/// Decoder: dense(N * D_enc, relu) -> reshape N x D_enc -> GIN(5, linear).
/// Inputs and outputs are raw plastic strains (N x 3); normalization is internal.
class GraphAutoencoder {
 public:
  GraphAutoencoder(const mesh::PlasticityGraph& graph, int d_enc, std::uint64_t seed,
                   int hidden = 64, double gin_eps = 0.0);

  int num_nodes() const { return n_; }
  int d_enc() const { return d_enc_; }
  const num::ParamSet& params() const { return params_; }
  num::ParamSet& params() { return params_; }

  /// Coordinates to [0, 1]; plastic components z-scored over the snapshots.
  void fit_normalization(const std::vector<Matrix>& snapshots);
  const num::Affine& plastic_norm() const { return plastic_norm_; }

  Matrix encode(const Matrix& plastic) const;                   // 1 x D_enc
  Matrix encode_batch(const std::vector<Matrix>& plastic) const;  // B x D_enc
  /// Full N x 5 reconstruction in raw units (coordinates unpenalized in training).
  Matrix decode(const Matrix& zeta) const;
  Matrix decode_plastic(const Matrix& zeta) const;  // N x 3

  /// Node-wise loss on normalized plastic columns, averaged over snapshots.
  double loss(const std::vector<Matrix>& snapshots) const;

  TrainHistory train(const std::vector<Matrix>& snapshots, const TrainConfig& cfg);

  num::Json to_json() const;
  static GraphAutoencoder from_json(const num::Json& doc, const mesh::PlasticityGraph& graph);

 private:
  struct Batch {
    Matrix aggregated;  // (B N) x 5, (A + I) X of normalized features
    Matrix target;      // (B N) x 3, normalized plastic
  };
  Batch make_batch(const std::vector<const Matrix*>& plastic) const;
  num::Var encode_vars(num::Tape& t, const std::vector<num::Var>& pv, num::Var agg, int b) const;
  num::Var decode_vars(num::Tape& t, const std::vector<num::Var>& pv, num::Var z, int b) const;
  num::Var batch_loss(num::Tape& t, const std::vector<num::Var>& pv, const Batch& batch,
                      int b) const;

  int n_;
  int d_enc_;
  int hidden_;
  double gin_eps_;
  std::uint64_t seed_;
  std::shared_ptr<const num::Adjacency> adj_;
  std::string adjacency_checksum_;
  Matrix coords_;  // N x 2 raw
  num::Affine coord_norm_;
  num::Affine plastic_norm_;
  num::ParamSet params_;
};

std::string adjacency_checksum(const mesh::PlasticityGraph& graph);

/// Pooled R^2 of plastic components: 1 - SS_res / SS_tot with per-column means.
double plastic_r2(const std::vector<Matrix>& truth, const std::vector<Matrix>& predicted);

}  // namespace plastigraph::ae
