#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "plastigraph/numcore/init.hpp"
#include "plastigraph/numcore/params.hpp"
#include "plastigraph/numcore/tape.hpp"

namespace plastigraph::num {

enum class Activation { Linear, Relu, Tanh, Sigmoid };
enum class InitScheme { HeNormal, GlorotUniform };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);
InitScheme init_from_string(const std::string& s);
std::string to_string(InitScheme s);

/// One entry of a sequential architecture.
///   dense    : x W + b, then activation
///   multiply : elementwise square of the incoming features
///   gru      : recurrent layer; consumes a sequence
struct LayerSpec {
  std::string type;
  int units = 0;
  Activation activation = Activation::Linear;
};

/// Sequential stack of dense / multiply / gru layers over one ParamSet.
/// GRU layers, if any, must come first. Every GRU except the last returns its
/// whole sequence; the last one returns its final hidden state.
class Sequential {
 public:
  Sequential() = default;
  Sequential(int input_dim, std::vector<LayerSpec> layers, InitScheme init, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  bool is_recurrent() const { return num_gru_ > 0; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  const ParamSet& params() const { return params_; }
  ParamSet& params() { return params_; }

  /// Feed-forward evaluation on a (batch x input_dim) Var.
  Var forward(Tape& tape, std::span<const Var> pv, Var x) const;
  /// Recurrent evaluation; `steps[t]` is (batch x input_dim).
  Var forward_sequence(Tape& tape, std::span<const Var> pv, std::span<const Var> steps) const;

  Matrix predict(const Matrix& x) const;
  Matrix predict_sequence(const std::vector<Matrix>& steps) const;

  nlohmann::json architecture() const;
  static Sequential from_architecture(const nlohmann::json& arch);

 private:
  Var apply_tail(Tape& tape, std::span<const Var> pv, Var x, std::size_t first_layer,
                 std::size_t first_param) const;
  void build(InitScheme init, std::uint64_t seed);

  int input_dim_ = 0;
  int output_dim_ = 0;
  int num_gru_ = 0;
  std::vector<LayerSpec> layers_;
  InitScheme init_ = InitScheme::HeNormal;
  std::uint64_t seed_ = 0;
  ParamSet params_;
};

/// Single GRU cell update with the concatenated-kernel layout
/// W: in x 3u, U: u x 3u, b: 1 x 3u, gate blocks ordered (z, r, candidate).
/// h' = h~ + z (h - h~).
Var gru_cell(Tape& tape, Var x, Var h, Var w, Var u, Var b, int units);

Var apply_activation(Tape& tape, Var x, Activation a);

}  // namespace plastigraph::num
