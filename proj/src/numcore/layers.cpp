#include "plastigraph/numcore/layers.hpp"

#include "plastigraph/error.hpp"

namespace plastigraph::num {

Activation activation_from_string(const std::string& s) {
  if (s == "linear") return Activation::Linear;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "linear";
}

InitScheme init_from_string(const std::string& s) {
  if (s == "he_normal") return InitScheme::HeNormal;
  if (s == "glorot_uniform") return InitScheme::GlorotUniform;
  throw ConfigError("unknown initializer '" + s + "'");
}

std::string to_string(InitScheme s) {
  return s == InitScheme::HeNormal ? "he_normal" : "glorot_uniform";
}

Var apply_activation(Tape& tape, Var x, Activation a) {
  switch (a) {
    case Activation::Linear: return x;
    case Activation::Relu: return tape.relu(x);
    case Activation::Tanh: return tape.tanh(x);
    case Activation::Sigmoid: return tape.sigmoid(x);
  }
  return x;
}

Var gru_cell(Tape& tape, Var x, Var h, Var w, Var u, Var b, int units) {
  Var xw = tape.add_row(tape.matmul(x, w), b);
  Var hu = tape.matmul(h, u);
  Var z = tape.sigmoid(tape.add(tape.slice_cols(xw, 0, units), tape.slice_cols(hu, 0, units)));
  Var r = tape.sigmoid(
      tape.add(tape.slice_cols(xw, units, units), tape.slice_cols(hu, units, units)));
  Var cand = tape.tanh(tape.add(tape.slice_cols(xw, 2 * units, units),
                                tape.mul(r, tape.slice_cols(hu, 2 * units, units))));
  return tape.add(cand, tape.mul(z, tape.sub(h, cand)));
}

Sequential::Sequential(int input_dim, std::vector<LayerSpec> layers, InitScheme init,
                       std::uint64_t seed)
    : input_dim_(input_dim), layers_(std::move(layers)), init_(init), seed_(seed) {
  build(init, seed);
}

void Sequential::build(InitScheme init, std::uint64_t seed) {
  if (input_dim_ <= 0) throw ShapeError("Sequential: input_dim must be positive");
  Rng rng(seed);
  auto kernel = [&](int in, int out) {
    return init == InitScheme::HeNormal ? he_normal(in, out, rng) : glorot_uniform(in, out, rng);
  };
  int width = input_dim_;
  bool seen_static = false;
  num_gru_ = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& l = layers_[k];
    const std::string tag = "l" + std::to_string(k);
    if (l.type == "dense") {
      if (l.units <= 0) throw ShapeError("Sequential: dense layer needs units > 0");
      params_.add(tag + ".W", kernel(width, l.units));
      params_.add(tag + ".b", Matrix::Zero(1, l.units));
      width = l.units;
      seen_static = true;
    } else if (l.type == "multiply") {
      seen_static = true;
    } else if (l.type == "gru") {
      if (seen_static) throw StructuralError("Sequential: gru layers must precede dense layers");
      if (l.units <= 0) throw ShapeError("Sequential: gru layer needs units > 0");
      params_.add(tag + ".W", kernel(width, 3 * l.units));
      params_.add(tag + ".U", kernel(l.units, 3 * l.units));
      params_.add(tag + ".b", Matrix::Zero(1, 3 * l.units));
      width = l.units;
      ++num_gru_;
    } else {
      throw ConfigError("Sequential: unknown layer type '" + l.type + "'");
    }
  }
  output_dim_ = width;
}

Var Sequential::apply_tail(Tape& tape, std::span<const Var> pv, Var x, std::size_t first_layer,
                           std::size_t first_param) const {
  std::size_t p = first_param;
  for (std::size_t k = first_layer; k < layers_.size(); ++k) {
    const LayerSpec& l = layers_[k];
    if (l.type == "dense") {
      x = apply_activation(tape, tape.add_row(tape.matmul(x, pv[p]), pv[p + 1]), l.activation);
      p += 2;
    } else if (l.type == "multiply") {
      x = tape.square(x);
    }
  }
  return x;
}

Var Sequential::forward(Tape& tape, std::span<const Var> pv, Var x) const {
  if (num_gru_ > 0) throw StructuralError("Sequential: recurrent model needs forward_sequence");
  if (pv.size() != params_.size()) throw StructuralError("Sequential: parameter binding mismatch");
  if (tape.value(x).cols() != input_dim_) throw ShapeError("Sequential: input width mismatch");
  return apply_tail(tape, pv, x, 0, 0);
}

Var Sequential::forward_sequence(Tape& tape, std::span<const Var> pv,
                                 std::span<const Var> steps) const {
  if (pv.size() != params_.size()) throw StructuralError("Sequential: parameter binding mismatch");
  if (steps.empty()) throw ShapeError("Sequential: empty sequence");
  std::vector<Var> seq(steps.begin(), steps.end());
  const int batch = static_cast<int>(tape.value(seq[0]).rows());
  for (Var s : seq) {
    if (tape.value(s).cols() != input_dim_ || tape.value(s).rows() != batch) {
      throw ShapeError("Sequential: sequence step shape mismatch");
    }
  }
  std::size_t p = 0;
  std::size_t k = 0;
  for (; k < layers_.size() && layers_[k].type == "gru"; ++k) {
    const int units = layers_[k].units;
    Var h = tape.constant(Matrix::Zero(batch, units));
    std::vector<Var> out;
    out.reserve(seq.size());
    for (Var s : seq) {
      h = gru_cell(tape, s, h, pv[p], pv[p + 1], pv[p + 2], units);
      out.push_back(h);
    }
    seq = std::move(out);
    p += 3;
  }
  Var x = seq.back();
  return apply_tail(tape, pv, x, k, p);
}

Matrix Sequential::predict(const Matrix& x) const {
  Tape tape;
  auto pv = tape.parameters(params_);
  return tape.value(forward(tape, pv, tape.constant(x)));
}

Matrix Sequential::predict_sequence(const std::vector<Matrix>& steps) const {
  Tape tape;
  auto pv = tape.parameters(params_);
  std::vector<Var> s;
  s.reserve(steps.size());
  for (const auto& m : steps) s.push_back(tape.constant(m));
  return tape.value(forward_sequence(tape, pv, s));
}

nlohmann::json Sequential::architecture() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) {
    nlohmann::json j{{"type", l.type}};
    if (l.type != "multiply") j["units"] = l.units;
    if (l.type == "dense") j["activation"] = to_string(l.activation);
    layers.push_back(j);
  }
  return {{"input_dim", input_dim_}, {"layers", layers}, {"init", to_string(init_)},
          {"seed", seed_}};
}

Sequential Sequential::from_architecture(const nlohmann::json& arch) {
  std::vector<LayerSpec> layers;
  for (const auto& j : arch.at("layers")) {
    LayerSpec l;
    l.type = j.at("type").get<std::string>();
    if (j.contains("units")) l.units = j.at("units").get<int>();
    if (j.contains("activation")) l.activation = activation_from_string(j.at("activation"));
    layers.push_back(l);
  }
  return Sequential(arch.at("input_dim").get<int>(), std::move(layers),
                    init_from_string(arch.at("init").get<std::string>()),
                    arch.at("seed").get<std::uint64_t>());
}

}  // namespace plastigraph::num
