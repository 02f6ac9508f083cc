#pragma once

#include <cstdint>
#include <random>

#include "lace/tensor.hpp"

namespace lace {

using Rng = std::mt19937_64;

// uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
// N(0, stddev) resampled outside two standard deviations.
Tensor truncated_normal(Shape shape, double stddev, Rng& rng);

}  // namespace lace
