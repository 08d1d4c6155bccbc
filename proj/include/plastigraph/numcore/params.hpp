#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "plastigraph/numcore/matrix.hpp"

namespace plastigraph::num {

/// Named real arrays with fixed shapes. Insertion order is the flat order.
class ParamSet {
 public:
  /// Adds a parameter; names must be unique. Returns its index.
  std::size_t add(std::string name, Matrix init);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  const Matrix& operator[](std::size_t i) const { return values_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// Replaces a value; the shape must match.
  void set(std::size_t i, const Matrix& value);
  /// In-place mutation for optimizers. Shape changes are not allowed.
  Matrix& mutable_value(std::size_t i) { return values_.at(i); }

  std::size_t total_count() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  /// Zero-initialized arrays shaped like every parameter.
  std::vector<Matrix> zeros_like() const;

  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

/// Gradients with the same layout as a ParamSet.
using ParamGrads = std::vector<Matrix>;

}  // namespace plastigraph::num
