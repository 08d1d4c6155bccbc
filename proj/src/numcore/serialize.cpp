#include "plastigraph/numcore/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "plastigraph/error.hpp"

namespace plastigraph::num {

Matrix Affine::apply(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != size()) throw ShapeError("Affine: width mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - offset[c]) / scale[c];
  }
  return out;
}

Matrix Affine::invert(const Matrix& xn) const {
  if (static_cast<std::size_t>(xn.cols()) != size()) throw ShapeError("Affine: width mismatch");
  Matrix out = xn;
  for (Eigen::Index c = 0; c < xn.cols(); ++c) {
    out.col(c) = xn.col(c).array() * scale[c] + offset[c];
  }
  return out;
}

Affine Affine::fit_range(const Matrix& x, double lo, double hi) {
  if (x.rows() == 0) throw DataError("Affine: empty sample");
  Affine a;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mn = x.col(c).minCoeff();
    const double mx = x.col(c).maxCoeff();
    double s = (mx - mn) / (hi - lo);
    if (!(s > 0.0)) s = 1.0;
    a.scale.push_back(s);
    a.offset.push_back(mn - lo * s);
  }
  return a;
}

Affine Affine::fit_zscore(const Matrix& x, double floor) {
  if (x.rows() == 0) throw DataError("Affine: empty sample");
  Affine a;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double var = (x.col(c).array() - mean).square().mean();
    a.offset.push_back(mean);
    a.scale.push_back(std::max(std::sqrt(var), floor));
  }
  return a;
}

Affine Affine::identity(std::size_t n) {
  return Affine{std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
}

Json Affine::to_json() const { return {{"offset", offset}, {"scale", scale}}; }

Affine Affine::from_json(const Json& j) {
  Affine a;
  a.offset = j.at("offset").get<std::vector<double>>();
  a.scale = j.at("scale").get<std::vector<double>>();
  if (a.offset.size() != a.scale.size()) throw ArtifactError("Affine: inconsistent lengths");
  return a;
}

Json params_to_json(const ParamSet& params) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& m = params[i];
    arr.push_back({{"name", params.name(i)},
                   {"shape", {m.rows(), m.cols()}},
                   {"values", std::vector<double>(m.data(), m.data() + m.size())}});
  }
  return arr;
}

void params_from_json(const Json& j, ParamSet& params) {
  if (!j.is_array() || j.size() != params.size()) {
    throw ArtifactError("model file: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Json& e = j[i];
    if (e.at("name").get<std::string>() != params.name(i)) {
      throw ArtifactError("model file: expected parameter '" + params.name(i) + "'");
    }
    const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
    const auto values = e.at("values").get<std::vector<double>>();
    const Matrix& cur = params[i];
    if (shape.size() != 2 || shape[0] != cur.rows() || shape[1] != cur.cols() ||
        values.size() != static_cast<std::size_t>(cur.size())) {
      throw ArtifactError("model file: shape mismatch for '" + params.name(i) + "'");
    }
    Matrix m(cur.rows(), cur.cols());
    std::copy(values.begin(), values.end(), m.data());
    params.set(i, m);
  }
}

Json model_document(const std::string& kind, const Sequential& net, const Json& normalization) {
  const Json arch = net.architecture();
  return {{"kind", kind},
          {"architecture", arch},
          {"seed", arch.at("seed")},
          {"params", params_to_json(net.params())},
          {"normalization", normalization}};
}

Sequential sequential_from_document(const Json& doc, const std::string& expected_kind) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind != expected_kind) {
    throw ArtifactError("model file: kind '" + kind + "', expected '" + expected_kind + "'");
  }
  Sequential net = Sequential::from_architecture(doc.at("architecture"));
  params_from_json(doc.at("params"), net.params());
  return net;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[i] = digits[h & 0xF];
  return s;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace plastigraph::num
