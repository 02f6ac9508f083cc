#include "lace/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lace/errors.hpp"

namespace lace {
namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(tape.external(p));
  return f(tape, leaves).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor>& params, double eps) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& p : params) leaves.push_back(tape.external(p));
    const Var out = f(tape, leaves);
    tape.backward(out);
    for (const Var& v : leaves) analytic.push_back(v.grad());
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = evaluate(f, params);
      p[i] = saved - eps;
      const double down = evaluate(f, params);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || !std::isfinite(rel)) {
        result.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
        result.worst_param = pi;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace lace
