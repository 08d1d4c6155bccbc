#pragma once

#include <cstdint>
#include <vector>

#include "plastigraph/numcore/params.hpp"

namespace plastigraph::num {

enum class OptimizerKind { Adam, Nadam };

/// Moment accumulators and hyperparameters. Defaults follow the common
/// framework defaults (beta1 = 0.9, beta2 = 0.999, eps = 1e-8, lr = 1e-3).
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum_decay = 4e-3;  // Nadam momentum schedule
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
  double mu_product = 1.0;

  static OptimizerState make(OptimizerKind kind, const ParamSet& params, double lr = 1e-3);
};

/// Bias-corrected Adam update. Throws on non-finite gradients before touching
/// either the parameters or the state.
void adam_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads);

/// Nesterov-accelerated Adam with the 0.96^(t * decay) momentum schedule.
void nadam_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads);

/// Dispatches on `state.kind`.
void optimizer_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads);

}  // namespace plastigraph::num
