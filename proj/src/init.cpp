#include "lace/init.hpp"

#include <cmath>

namespace lace {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor truncated_normal(Shape shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.data()) {
    do {
      v = dist(rng);
    } while (std::abs(v) > 2.0 * stddev);
  }
  return t;
}

}  // namespace lace
