#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lace/tape.hpp"
#include "lace/tensor.hpp"

// Differentiable operations recorded on a Tape. Every function here has a
// backward rule and is covered by a finite-difference check in the tests.
namespace lace::ops {

// Row-major boolean mask; nonzero = keep.
using Mask = std::vector<std::uint8_t>;

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// a (m x n) + row (1 x n) broadcast over rows.
Var add_row(const Var& a, const Var& row);
// Elementwise product with a constant tensor (no gradient to `c`).
Var mul_const(const Var& a, const Tensor& c);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var neg(const Var& a);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var elu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var exp(const Var& a);
// log(sigmoid(a)) evaluated without forming sigmoid(a).
Var log_sigmoid(const Var& a);

Var sum(const Var& a);
// Scalar max(x) + log sum exp(x - max(x)) over all elements.
Var logsumexp(const Var& a);
// Column-wise log-sum-exp: (k x d) -> (1 x d).
Var logsumexp_rows(const Var& a);
// Column-wise max: (k x d) -> (1 x d). Ties route gradient to the first row.
Var max_rows(const Var& a);

// Row-wise (x - mean) / sqrt(var + eps) * gain + bias, gain/bias 1 x d.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps);

// Row-wise softmax over kept entries; masked entries are exactly 0.
// A row with no kept entry throws DomainError.
Var softmax_masked(const Var& logits, const Mask& mask);
// x_ij / sum_j x_ij. Rows must have nonzero sum.
Var row_normalize(const Var& x);

Var concat_cols(std::span<const Var> parts);
Var stack_rows(std::span<const Var> rows);
Var slice_cols(const Var& a, std::size_t start, std::size_t len);
Var slice_rows(const Var& a, std::size_t start, std::size_t len);
Var gather_rows(const Var& table, std::span<const std::size_t> indices);
Var select_cols(const Var& a, std::span<const std::size_t> indices);
// u (m x 1), v (1 x n) -> out_ij = u_i + v_j.
Var outer_add(const Var& u, const Var& v);

// Batched per-class bilinear form. x, y: (P x n); weights: (C x g x m x m)
// with n = g * m (block-diagonal when g > 1); bias: (1 x C).
// out_pc = sum_k x_pk^T W_ck y_pk + b_c.
Var bilinear(const Var& x, const Var& weights, const Var& y, const Var& bias);

}  // namespace lace::ops

namespace lace {

// Plain stabilized helpers shared by ops and by non-differentiable paths.
double stable_logsumexp(std::span<const double> x);
double log_sigmoid(double x);
double sigmoid(double x);

}  // namespace lace
