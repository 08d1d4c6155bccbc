#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "plastigraph/numcore/matrix.hpp"
#include "plastigraph/numcore/optim.hpp"
#include "plastigraph/numcore/serialize.hpp"

namespace plastigraph::nets {

using num::Matrix;

struct NetTrainConfig {
  int epochs = 1000;
  int batch = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;
  int log_every = 0;  // 0: silent
};

struct LossHistory {
  std::vector<double> train;
  std::vector<double> validation;  // empty when there is no validation split
};

/// epoch,train_loss[,validation_loss]
void write_loss_csv(const std::filesystem::path& path, const LossHistory& h);

/// Seeded random split into (train, validation) row indices, each sorted.
std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double validation_fraction,
                                                            std::uint64_t seed);
Matrix take_rows(const Matrix& m, const std::vector<int>& rows);

/// 1 - SS_res / SS_tot per column.
std::vector<double> r2_per_column(const Matrix& truth, const Matrix& pred);
/// Pooled over all entries with per-column means.
double r2_pooled(const Matrix& truth, const Matrix& pred);

/// Shuffled mini-batch driver shared by the constitutive nets. `step` gets the
/// row indices of one batch and returns its loss (after updating parameters);
/// `validate` returns the validation loss or a negative value for none.
template <class Step, class Validate>
LossHistory run_epochs(int n_train, const NetTrainConfig& cfg, const std::string& tag, Step&& step,
                       Validate&& validate);

}  // namespace plastigraph::nets

#include "plastigraph/nets/common_impl.hpp"
