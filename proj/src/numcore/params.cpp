#include "plastigraph/numcore/params.hpp"

#include "plastigraph/error.hpp"

namespace plastigraph::num {

std::size_t ParamSet::add(std::string name, Matrix init) {
  if (contains(name)) throw StructuralError("ParamSet: duplicate parameter '" + name + "'");
  if (!init.allFinite()) throw NumericalError("ParamSet: non-finite initial value for '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

std::size_t ParamSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw StructuralError("ParamSet: unknown parameter '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

void ParamSet::set(std::size_t i, const Matrix& value) {
  Matrix& slot = values_.at(i);
  if (slot.rows() != value.rows() || slot.cols() != value.cols()) {
    throw ShapeError("ParamSet: shape change for '" + names_[i] + "'");
  }
  slot = value;
}

std::size_t ParamSet::total_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_count());
  for (const auto& v : values_) flat.insert(flat.end(), v.data(), v.data() + v.size());
  return flat;
}

void ParamSet::unflatten(std::span<const double> flat) {
  if (flat.size() != total_count()) throw ShapeError("ParamSet: flat length mismatch");
  std::size_t k = 0;
  for (auto& v : values_) {
    std::copy(flat.begin() + k, flat.begin() + k + v.size(), v.data());
    k += static_cast<std::size_t>(v.size());
  }
}

std::vector<Matrix> ParamSet::zeros_like() const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(Matrix::Zero(v.rows(), v.cols()));
  return out;
}

bool ParamSet::all_finite() const {
  for (const auto& v : values_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

}  // namespace plastigraph::num
