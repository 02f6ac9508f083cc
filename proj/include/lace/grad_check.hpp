#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lace/tape.hpp"

namespace lace {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Builds a scalar on `tape` from leaves bound to `params` (same order).
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> params)>;

// Compares reverse-mode gradients against central differences
// (f(x+eps) - f(x-eps)) / (2 eps) for every coordinate of every parameter.
// Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8).
// Parameters are perturbed in place and restored before returning.
GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor>& params, double eps = 1e-5);

}  // namespace lace
