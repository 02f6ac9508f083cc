#include "lace/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lace/errors.hpp"

namespace lace {

double stable_logsumexp(std::span<const double> x) {
  if (x.empty()) throw DomainError("logsumexp of an empty vector");
  const double mx = *std::max_element(x.begin(), x.end());
  if (std::isinf(mx)) return mx;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

double log_sigmoid(double x) {
  return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace lace

namespace lace::ops {
namespace {

void require_rank2(const Var& a, const char* op) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 input, got " +
                     shape_str(a.shape()));
  }
}

void require_same(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

// Elementwise unary op. `deriv(x, y)` gives dy/dx from input and output.
template <class F, class D>
Var unary(const Var& a, F f, D deriv) {
  Tensor out = a.value();
  for (double& v : out.data()) v = f(v);
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, deriv](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& x = t.value(in);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * deriv(x[i], y[i]);
  });
}

void accumulate_if(Tape& t, std::size_t id, const Tensor& delta) {
  if (t.requires_grad(id)) t.grad_buffer(id) += delta;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += aip * B(p, j);
    }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g(i, j);
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) ga(i, p) += gij * B(p, j);
        }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb(p, j) += aip * g(i, j);
        }
    }
  });
}

Var transpose(const Var& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a.value()(i, j);
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, m, n](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += g(j, i);
  });
}

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    accumulate_if(t, ia, g);
    accumulate_if(t, ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    Tensor g = t.grad(self);
    accumulate_if(t, ia, g);
    for (double& v : g.data()) v = -v;
    accumulate_if(t, ib, g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  require_rank2(a, "add_row");
  require_rank2(row, "add_row");
  const std::size_t m = a.rows(), n = a.cols();
  if (row.rows() != 1 || row.cols() != n) {
    throw ShapeError("add_row: cannot broadcast " + shape_str(row.shape()) + " over " +
                     shape_str(a.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += row.value()(0, j);
  const std::size_t ia = a.id(), ir = row.id();
  return a.tape().record(std::move(out), {a, row}, [ia, ir, m, n](Tape& t, std::size_t self) {
    const Tensor g = t.grad(self);
    accumulate_if(t, ia, g);
    if (t.requires_grad(ir)) {
      Tensor& gr = t.grad_buffer(ir);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr(0, j) += g(i, j);
    }
  });
}

Var mul_const(const Var& a, const Tensor& c) {
  if (a.shape() != c.shape()) {
    throw ShapeError("mul_const: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(c.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c[i];
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, c](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * c[i];
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var sigmoid(const Var& a) {
  return unary(a, [](double x) { return lace::sigmoid(x); },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var elu(const Var& a) {
  return unary(a, [](double x) { return x >= 0.0 ? x : std::expm1(x); },
               [](double x, double y) { return x >= 0.0 ? 1.0 : y + 1.0; });
}

Var leaky_relu(const Var& a, double slope) {
  return unary(a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
               [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log_sigmoid(const Var& a) {
  return unary(a, [](double x) { return lace::log_sigmoid(x); },
               [](double x, double) { return lace::sigmoid(-x); });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t in = a.id();
  return a.tape().record(Tensor::scalar(s), {a}, [in](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const double g = t.grad(self)[0];
    for (double& v : t.grad_buffer(in).data()) v += g;
  });
}

Var logsumexp(const Var& a) {
  const double lse = stable_logsumexp(a.value().data());
  const std::size_t in = a.id();
  return a.tape().record(Tensor::scalar(lse), {a}, [in](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const double g = t.grad(self)[0];
    const double out = t.value(self)[0];
    const Tensor& x = t.value(in);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g * std::exp(x[i] - out);
  });
}

Var logsumexp_rows(const Var& a) {
  require_rank2(a, "logsumexp_rows");
  const std::size_t k = a.rows(), d = a.cols();
  if (k == 0) throw DomainError("logsumexp_rows over zero rows");
  Tensor out({1, d});
  std::vector<double> column(k);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < k; ++i) column[i] = a.value()(i, j);
    out(0, j) = stable_logsumexp(column);
  }
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, k, d](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const Tensor& x = t.value(in);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < d; ++j) gx(i, j) += g(0, j) * std::exp(x(i, j) - y(0, j));
  });
}

Var max_rows(const Var& a) {
  require_rank2(a, "max_rows");
  const std::size_t k = a.rows(), d = a.cols();
  if (k == 0) throw DomainError("max_rows over zero rows");
  Tensor out({1, d});
  std::vector<std::size_t> argmax(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    out(0, j) = a.value()(0, j);
    for (std::size_t i = 1; i < k; ++i) {
      if (a.value()(i, j) > out(0, j)) {
        out(0, j) = a.value()(i, j);
        argmax[j] = i;
      }
    }
  }
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a},
                         [in, argmax = std::move(argmax)](Tape& t, std::size_t self) {
                           if (!t.requires_grad(in)) return;
                           const Tensor& g = t.grad(self);
                           Tensor& gx = t.grad_buffer(in);
                           for (std::size_t j = 0; j < argmax.size(); ++j)
                             gx(argmax[j], j) += g(0, j);
                         });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t m = x.rows(), d = x.cols();
  if (d == 0) throw DomainError("layer_norm over zero-width rows");
  const Shape row_shape{1, d};
  if (gain.shape() != row_shape || bias.shape() != row_shape) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " do not match width " + std::to_string(d));
  }
  Tensor xhat({m, d});
  std::vector<double> inv_std(m);
  Tensor out({m, d});
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x.value()(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x.value()(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (x.value()(i, j) - mean) * inv_std[i];
      out(i, j) = xhat(i, j) * gain.value()(0, j) + bias.value()(0, j);
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().record(
      std::move(out), {x, gain, bias},
      [ix, ig, ib, m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gamma = t.value(ig);
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad_buffer(ig);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gg(0, j) += g(i, j) * xhat(i, j);
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_buffer(ib);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) gb(0, j) += g(i, j);
        }
        if (t.requires_grad(ix)) {
          Tensor& gx = t.grad_buffer(ix);
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dxh = g(i, j) * gamma(0, j);
              mean_dxhat += dxh;
              mean_dxhat_xhat += dxh * xhat(i, j);
            }
            mean_dxhat *= inv_d;
            mean_dxhat_xhat *= inv_d;
            for (std::size_t j = 0; j < d; ++j) {
              const double dxh = g(i, j) * gamma(0, j);
              gx(i, j) += inv_std[i] * (dxh - mean_dxhat - xhat(i, j) * mean_dxhat_xhat);
            }
          }
        }
      });
}

Var softmax_masked(const Var& logits, const Mask& mask) {
  require_rank2(logits, "softmax_masked");
  const std::size_t m = logits.rows(), n = logits.cols();
  if (mask.size() != m * n) {
    throw ShapeError("softmax_masked: mask of " + std::to_string(mask.size()) +
                     " entries for logits " + shape_str(logits.shape()));
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask[i * n + j]) continue;
      any = true;
      mx = std::max(mx, logits.value()(i, j));
    }
    if (!any) throw DomainError("softmax_masked: row " + std::to_string(i) + " has no kept entry");
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask[i * n + j]) continue;
      out(i, j) = std::exp(logits.value()(i, j) - mx);
      z += out(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= z;
  }
  const std::size_t in = logits.id();
  return logits.tape().record(std::move(out), {logits}, [in, m, n](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < n; ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var row_normalize(const Var& x) {
  require_rank2(x, "row_normalize");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x.value();
  std::vector<double> sums(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) sums[i] += out(i, j);
    if (sums[i] == 0.0) throw DomainError("row_normalize: row " + std::to_string(i) + " sums to zero");
    for (std::size_t j = 0; j < n; ++j) out(i, j) /= sums[i];
  }
  const std::size_t in = x.id();
  return x.tape().record(std::move(out), {x},
                         [in, m, n, sums = std::move(sums)](Tape& t, std::size_t self) {
                           if (!t.requires_grad(in)) return;
                           const Tensor& g = t.grad(self);
                           const Tensor& y = t.value(self);
                           Tensor& gx = t.grad_buffer(in);
                           for (std::size_t i = 0; i < m; ++i) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
                             for (std::size_t j = 0; j < n; ++j)
                               gx(i, j) += (g(i, j) - dot) / sums[i];
                           }
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t m = parts.front().rows();
  std::size_t n = 0;
  for (const Var& p : parts) {
    if (p.rows() != m) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts.front().shape()) + " vs " +
                       shape_str(p.shape()));
    }
    n += p.cols();
  }
  Tensor out({m, n});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p.value()(i, j);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().tape().record(
      std::move(out), std::move(inputs),
      [ids = std::move(ids), offsets = std::move(offsets), m](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor& gp = t.grad_buffer(ids[k]);
          const std::size_t w = gp.cols();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) gp(i, j) += g(i, offsets[k] + j);
        }
      });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t n = rows.front().cols();
  std::size_t m = 0;
  for (const Var& r : rows) {
    if (r.cols() != n) {
      throw ShapeError("stack_rows: column mismatch " + shape_str(rows.front().shape()) +
                       " vs " + shape_str(r.shape()));
    }
    m += r.rows();
  }
  std::vector<double> values;
  values.reserve(m * n);
  std::vector<std::size_t> ids;
  for (const Var& r : rows) {
    values.insert(values.end(), r.value().data().begin(), r.value().data().end());
    ids.push_back(r.id());
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return rows.front().tape().record(
      Tensor({m, n}, std::move(values)), std::move(inputs),
      [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t id : ids) {
          const std::size_t len = t.value(id).size();
          if (t.requires_grad(id)) {
            Tensor& gp = t.grad_buffer(id);
            for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
          }
          off += len;
        }
      });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t len) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.rows();
  if (start + len > a.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for " + shape_str(a.shape()));
  }
  Tensor out({m, len});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < len; ++j) out(i, j) = a.value()(i, start + j);
  const std::size_t in = a.id();
  return a.tape().record(std::move(out), {a}, [in, m, start, len](Tape& t, std::size_t self) {
    if (!t.requires_grad(in)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(in);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j) gx(i, start + j) += g(i, j);
  });
}

Var slice_rows(const Var& a, std::size_t start, std::size_t len) {
  require_rank2(a, "slice_rows");
  const std::size_t n = a.cols();
  if (start + len > a.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for " + shape_str(a.shape()));
  }
  const auto first = a.value().data().begin() + static_cast<std::ptrdiff_t>(start * n);
  std::vector<double> values(first, first + static_cast<std::ptrdiff_t>(len * n));
  const std::size_t in = a.id();
  return a.tape().record(Tensor({len, n}, std::move(values)), {a},
                         [in, start, n](Tape& t, std::size_t self) {
                           if (!t.requires_grad(in)) return;
                           const Tensor& g = t.grad(self);
                           Tensor& gx = t.grad_buffer(in);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[start * n + i] += g[i];
                         });
}

Var gather_rows(const Var& table, std::span<const std::size_t> indices) {
  require_rank2(table, "gather_rows");
  const std::size_t n = table.cols();
  Tensor out({indices.size(), n});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= table.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(indices[r]) + " out of range for " +
                       shape_str(table.shape()));
    }
    for (std::size_t j = 0; j < n; ++j) out(r, j) = table.value()(indices[r], j);
  }
  const std::size_t in = table.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return table.tape().record(std::move(out), {table},
                             [in, n, idx = std::move(idx)](Tape& t, std::size_t self) {
                               if (!t.requires_grad(in)) return;
                               const Tensor& g = t.grad(self);
                               Tensor& gx = t.grad_buffer(in);
                               for (std::size_t r = 0; r < idx.size(); ++r)
                                 for (std::size_t j = 0; j < n; ++j) gx(idx[r], j) += g(r, j);
                             });
}

Var select_cols(const Var& a, std::span<const std::size_t> indices) {
  require_rank2(a, "select_cols");
  const std::size_t m = a.rows();
  Tensor out({m, indices.size()});
  for (std::size_t c = 0; c < indices.size(); ++c) {
    if (indices[c] >= a.cols()) {
      throw ShapeError("select_cols: column " + std::to_string(indices[c]) +
                       " out of range for " + shape_str(a.shape()));
    }
    for (std::size_t i = 0; i < m; ++i) out(i, c) = a.value()(i, indices[c]);
  }
  const std::size_t in = a.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return a.tape().record(std::move(out), {a},
                         [in, m, idx = std::move(idx)](Tape& t, std::size_t self) {
                           if (!t.requires_grad(in)) return;
                           const Tensor& g = t.grad(self);
                           Tensor& gx = t.grad_buffer(in);
                           for (std::size_t c = 0; c < idx.size(); ++c)
                             for (std::size_t i = 0; i < m; ++i) gx(i, idx[c]) += g(i, c);
                         });
}

Var outer_add(const Var& u, const Var& v) {
  require_rank2(u, "outer_add");
  require_rank2(v, "outer_add");
  if (u.cols() != 1 || v.rows() != 1) {
    throw ShapeError("outer_add: expected column and row, got " + shape_str(u.shape()) + " and " +
                     shape_str(v.shape()));
  }
  const std::size_t m = u.rows(), n = v.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = u.value()(i, 0) + v.value()(0, j);
  const std::size_t iu = u.id(), iv = v.id();
  return u.tape().record(std::move(out), {u, v}, [iu, iv, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(iu)) {
      Tensor& gu = t.grad_buffer(iu);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gu(i, 0) += g(i, j);
    }
    if (t.requires_grad(iv)) {
      Tensor& gv = t.grad_buffer(iv);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gv(0, j) += g(i, j);
    }
  });
}

Var bilinear(const Var& x, const Var& weights, const Var& y, const Var& bias) {
  require_rank2(x, "bilinear");
  require_same(x, y, "bilinear");
  const Shape& ws = weights.shape();
  if (ws.size() != 4 || ws[2] != ws[3]) {
    throw ShapeError("bilinear: weights must be (C, g, m, m), got " + shape_str(ws));
  }
  const std::size_t P = x.rows(), n = x.cols();
  const std::size_t C = ws[0], groups = ws[1], m = ws[2];
  if (groups * m != n) {
    throw ShapeError("bilinear: input width " + std::to_string(n) + " does not match weights " +
                     shape_str(ws));
  }
  if (bias.shape() != Shape{1, C}) {
    throw ShapeError("bilinear: bias " + shape_str(bias.shape()) + " for " + std::to_string(C) +
                     " classes");
  }
  const Tensor& X = x.value();
  const Tensor& Y = y.value();
  const Tensor& W = weights.value();
  Tensor out({P, C});
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t c = 0; c < C; ++c) {
      double acc = bias.value()(0, c);
      for (std::size_t k = 0; k < groups; ++k) {
        const double* w = W.data().data() + ((c * groups + k) * m) * m;
        for (std::size_t a = 0; a < m; ++a) {
          const double xa = X(p, k * m + a);
          if (xa == 0.0) continue;
          double row = 0.0;
          for (std::size_t b = 0; b < m; ++b) row += w[a * m + b] * Y(p, k * m + b);
          acc += xa * row;
        }
      }
      out(p, c) = acc;
    }
  const std::size_t ix = x.id(), iw = weights.id(), iy = y.id(), ib = bias.id();
  return x.tape().record(
      std::move(out), {x, weights, y, bias},
      [ix, iw, iy, ib, P, C, groups, m](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& X = t.value(ix);
        const Tensor& Y = t.value(iy);
        const Tensor& W = t.value(iw);
        const bool gx_on = t.requires_grad(ix), gy_on = t.requires_grad(iy),
                   gw_on = t.requires_grad(iw);
        Tensor* GX = gx_on ? &t.grad_buffer(ix) : nullptr;
        Tensor* GY = gy_on ? &t.grad_buffer(iy) : nullptr;
        Tensor* GW = gw_on ? &t.grad_buffer(iw) : nullptr;
        for (std::size_t p = 0; p < P; ++p)
          for (std::size_t c = 0; c < C; ++c) {
            const double gpc = g(p, c);
            if (gpc == 0.0) continue;
            for (std::size_t k = 0; k < groups; ++k) {
              const std::size_t base = ((c * groups + k) * m) * m;
              for (std::size_t a = 0; a < m; ++a) {
                const double xa = X(p, k * m + a);
                for (std::size_t b = 0; b < m; ++b) {
                  const double w = W[base + a * m + b];
                  const double yb = Y(p, k * m + b);
                  if (GX) (*GX)(p, k * m + a) += gpc * w * yb;
                  if (GY) (*GY)(p, k * m + b) += gpc * w * xa;
                  if (GW) (*GW)[base + a * m + b] += gpc * xa * yb;
                }
              }
            }
          }
        if (t.requires_grad(ib)) {
          Tensor& GB = t.grad_buffer(ib);
          for (std::size_t p = 0; p < P; ++p)
            for (std::size_t c = 0; c < C; ++c) GB(0, c) += g(p, c);
        }
      });
}

}  // namespace lace::ops
