#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "plastigraph/error.hpp"
#include "plastigraph/numcore/init.hpp"

namespace plastigraph::nets {

template <class Step, class Validate>
LossHistory run_epochs(int n_train, const NetTrainConfig& cfg, const std::string& tag, Step&& step,
                       Validate&& validate) {
  if (n_train < 1) throw DataError(tag + ": empty training set");
  if (cfg.batch < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0)) {
    throw ConfigError(tag + ": batch, epochs and learning rate must be positive");
  }
  num::Rng rng(cfg.seed);
  std::vector<int> order(n_train);
  LossHistory h;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (int start = 0; start < n_train; start += cfg.batch) {
      const int end = std::min(n_train, start + cfg.batch);
      std::vector<int> rows(order.begin() + start, order.begin() + end);
      const double l = step(rows);
      if (!std::isfinite(l)) {
        throw NumericalError(tag + ": loss is not finite at epoch " + std::to_string(epoch));
      }
      total += l * static_cast<double>(end - start);
    }
    h.train.push_back(total / n_train);
    const double v = validate();
    if (v >= 0.0) h.validation.push_back(v);
    if (cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0) {
      std::fprintf(stderr, "[%s] epoch %d loss %.6g%s\n", tag.c_str(), epoch + 1, h.train.back(),
                   v >= 0.0 ? (" val " + std::to_string(v)).c_str() : "");
    }
  }
  return h;
}

}  // namespace plastigraph::nets
