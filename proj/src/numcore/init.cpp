#include "plastigraph/numcore/init.hpp"

#include <cmath>

#include "plastigraph/error.hpp"

namespace plastigraph::num {

Matrix he_normal(int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw ShapeError("he_normal: fan sizes must be positive");
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

Matrix he_normal(int fan_in, int fan_out, std::uint64_t seed) {
  Rng rng(seed);
  return he_normal(fan_in, fan_out, rng);
}

Matrix glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw ShapeError("glorot_uniform: fan sizes must be positive");
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

Matrix glorot_uniform(int fan_in, int fan_out, std::uint64_t seed) {
  Rng rng(seed);
  return glorot_uniform(fan_in, fan_out, rng);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace plastigraph::num
