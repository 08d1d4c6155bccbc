#pragma once

#include <cstdint>
#include <random>

#include "plastigraph/numcore/matrix.hpp"

namespace plastigraph::num {

using Rng = std::mt19937_64;

/// Zero-mean normal entries with variance 2 / fan_in; shape fan_in x fan_out.
Matrix he_normal(int fan_in, int fan_out, Rng& rng);
Matrix he_normal(int fan_in, int fan_out, std::uint64_t seed);

/// Uniform on +-sqrt(6 / (fan_in + fan_out)); shape fan_in x fan_out.
Matrix glorot_uniform(int fan_in, int fan_out, Rng& rng);
Matrix glorot_uniform(int fan_in, int fan_out, std::uint64_t seed);

/// splitmix64 finaliser; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace plastigraph::num
