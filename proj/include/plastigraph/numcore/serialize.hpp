#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "plastigraph/numcore/layers.hpp"
#include "plastigraph/numcore/params.hpp"

namespace plastigraph::num {

using Json = nlohmann::json;

/// Per-column affine map x_n = (x - offset) / scale.
struct Affine {
  std::vector<double> offset;
  std::vector<double> scale;

  std::size_t size() const { return offset.size(); }
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& xn) const;

  /// Maps each column's [min, max] onto [lo, hi].
  static Affine fit_range(const Matrix& x, double lo, double hi);
  /// Zero mean, unit standard deviation (scale floored at `floor`).
  static Affine fit_zscore(const Matrix& x, double floor = 1e-12);
  static Affine identity(std::size_t n);

  Json to_json() const;
  static Affine from_json(const Json& j);
};

/// Row-major decimal arrays with shapes, in insertion order.
Json params_to_json(const ParamSet& params);
/// Loads values into an already-shaped ParamSet; names and shapes must match.
void params_from_json(const Json& j, ParamSet& params);

/// Generic model document: {kind, architecture, params, seed, normalization, extra...}.
Json model_document(const std::string& kind, const Sequential& net, const Json& normalization);
Sequential sequential_from_document(const Json& doc, const std::string& expected_kind);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

/// FNV-1a 64 of a byte string, hex encoded. Used for artifact checksums.
std::string fnv1a_hex(const std::string& bytes);
std::string file_checksum(const std::filesystem::path& path);

}  // namespace plastigraph::num
