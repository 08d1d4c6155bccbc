#include "plastigraph/numcore/optim.hpp"

#include <cmath>

#include "plastigraph/error.hpp"

namespace plastigraph::num {

OptimizerState OptimizerState::make(OptimizerKind kind, const ParamSet& params, double lr) {
  if (!(lr > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
  OptimizerState s;
  s.kind = kind;
  s.learning_rate = lr;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

namespace {

void validate(const OptimizerState& state, const ParamSet& params, const ParamGrads& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("optimizer: gradient/parameter count mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols() ||
        state.m[i].rows() != params[i].rows() || state.m[i].cols() != params[i].cols()) {
      throw ShapeError("optimizer: shape mismatch for '" + params.name(i) + "'");
    }
    if (!grads[i].allFinite()) {
      throw NumericalError("optimizer: non-finite gradient for '" + params.name(i) + "'");
    }
  }
}

}  // namespace

void adam_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads) {
  validate(state, params, grads);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    params.mutable_value(i).array() -=
        state.learning_rate * (m / c1) / ((v / c2).sqrt() + state.epsilon);
  }
}

void nadam_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads) {
  validate(state, params, grads);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double mu_t = state.beta1 * (1.0 - 0.5 * std::pow(0.96, t * state.momentum_decay));
  const double mu_next =
      state.beta1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * state.momentum_decay));
  state.mu_product *= mu_t;
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double w_grad = state.learning_rate * (1.0 - mu_t) / (1.0 - state.mu_product);
  const double w_mom = state.learning_rate * mu_next / (1.0 - state.mu_product * mu_next);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    const auto denom = (v / c2).sqrt() + state.epsilon;
    params.mutable_value(i).array() -= (w_grad * g + w_mom * m) / denom;
  }
}

void optimizer_step(OptimizerState& state, ParamSet& params, const ParamGrads& grads) {
  if (state.kind == OptimizerKind::Adam) {
    adam_step(state, params, grads);
  } else {
    nadam_step(state, params, grads);
  }
}

}  // namespace plastigraph::num
