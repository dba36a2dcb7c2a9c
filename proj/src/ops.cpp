#include "ksaqa/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ksaqa/error.hpp"
#include "ksaqa/parameters.hpp"

namespace ksaqa {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace ops {
namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()));
}

Shape matrix_shape(const Tensor& t) { return {t.rows(), t.cols()}; }

// c (+)= op(a) * op(b) where op transposes when requested.
void gemm(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& c) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  const std::size_t ac = a.cols(), bc = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &c[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a[p * ac + i] : a[i * ac + p];
      if (av == 0.0) continue;
      if (!tb) {
        const double* brow = b.data() + p * bc;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * b[j * bc + p];
      }
    }
  }
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdx_from_out) {
  const Tensor& x = a.value();
  Tensor out(matrix_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return a.tape().record(std::move(out), {a}, [a, dfdx_from_out](Tape& t, const Tensor& y, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx_from_out(y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) mismatch("matmul", x, y);
  Tensor out({x.rows(), y.cols()});
  gemm(x, false, y, false, out);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (a.tracked()) gemm(g, false, b.value(), true, t.grad(a.id()));
    if (b.tracked()) gemm(a.value(), true, g, false, t.grad(b.id()));
  });
}

Var add(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool same = x.rows() == y.rows() && x.cols() == y.cols();
  const bool broadcast = !same && y.rows() == 1 && y.cols() == x.cols();
  if (!same && !broadcast) mismatch("add", x, y);
  Tensor out(matrix_shape(x));
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[same ? i : i % n];
  return a.tape().record(std::move(out), {a, b}, [a, b, same, n](Tape& t, const Tensor&, const Tensor& g) {
    if (a.tracked()) t.grad(a.id()) += g;
    if (b.tracked()) {
      Tensor& gb = t.grad(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[same ? i : i % n] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) mismatch("sub", x, y);
  Tensor out(matrix_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (a.tracked()) t.grad(a.id()) += g;
    if (b.tracked()) {
      Tensor& gb = t.grad(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rows() != y.rows() || x.cols() != y.cols()) mismatch("mul", x, y);
  Tensor out(matrix_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (a.tracked()) {
      Tensor& ga = t.grad(a.id());
      const Tensor& y = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (b.tracked()) {
      Tensor& gb = t.grad(b.id());
      const Tensor& x = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  const Tensor& first = parts.front().value();
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (axis == 0) {
      if (v.cols() != first.cols()) mismatch("concat", first, v);
      rows += v.rows();
      cols = v.cols();
    } else {
      if (v.rows() != first.rows()) mismatch("concat", first, v);
      cols += v.cols();
      rows = v.rows();
    }
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) {
        if (axis == 0)
          out.at(offset + r, c) = v.at(r, c);
        else
          out.at(r, offset + c) = v.at(r, c);
      }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  return parts.front().tape().record(std::move(out), parts, [parts, axis](Tape& t, const Tensor&, const Tensor& g) {
    std::size_t offset = 0;
    const std::size_t gcols = g.cols();
    for (const Var& p : parts) {
      const Tensor& v = p.value();
      if (p.tracked()) {
        Tensor& gp = t.grad(p.id());
        for (std::size_t r = 0; r < v.rows(); ++r)
          for (std::size_t c = 0; c < v.cols(); ++c)
            gp.at(r, c) += axis == 0 ? g[(offset + r) * gcols + c] : g[r * gcols + offset + c];
      }
      offset += axis == 0 ? v.rows() : v.cols();
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  const std::size_t extent = axis == 0 ? x.rows() : x.cols();
  if (axis > 1 || begin >= end || end > extent)
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " out of range for shape " + shape_string(x.shape()));
  const std::size_t rows = axis == 0 ? end - begin : x.rows();
  const std::size_t cols = axis == 1 ? end - begin : x.cols();
  Tensor out({rows, cols});
  const std::size_t r0 = axis == 0 ? begin : 0, c0 = axis == 1 ? begin : 0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = x.at(r0 + r, c0 + c);
  return a.tape().record(std::move(out), {a}, [a, r0, c0](Tape& t, const Tensor& y, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c) ga.at(r0 + r, c0 + c) += g.at(r, c);
  });
}

Var row(Var a, std::size_t r) { return slice(a, 0, r, r + 1); }

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out({x.cols(), x.rows()});
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(c, r) = x.at(r, c);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t r = 0; r < y.rows(); ++r)
      for (std::size_t c = 0; c < y.cols(); ++c) ga.at(c, r) += g.at(r, c);
  });
}

Var repeat_rows(Var a, std::size_t times) {
  const Tensor& x = a.value();
  if (x.rows() != 1) throw ShapeError("repeat_rows needs a single row, got " + shape_string(x.shape()));
  const std::size_t n = x.cols();
  Tensor out({times, n});
  for (std::size_t r = 0; r < times; ++r)
    for (std::size_t c = 0; c < n; ++c) out.at(r, c) = x[c];
  return a.tape().record(std::move(out), {a}, [a, n](Tape& t, const Tensor&, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i % n] += g[i];
  });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return ksaqa::sigmoid(x); }, [](double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double y) { return 1.0 - y * y; });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  if (x.size() == 0) throw ShapeError("softmax of empty tensor");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  Tensor out(matrix_shape(x));
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= z;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    if (!a.tracked()) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += y[i] * (g[i] - dot);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (double& v : ga.values()) v += g[0];
  });
}

Var embedding_lookup(Tape& tape, const Parameter& table, std::span<const std::size_t> rows) {
  const Tensor& w = table.value;
  const std::size_t d = w.cols();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= w.rows())
      throw ShapeError("embedding_lookup: row " + std::to_string(rows[i]) + " outside table " + table.name + " " +
                       shape_string(w.shape()));
    std::copy_n(w.data() + rows[i] * d, d, out.data() + i * d);
  }
  // The backward pass scatters only the looked-up rows; no dense table gradient.
  std::vector<std::size_t> ids(rows.begin(), rows.end());
  const Parameter* tp = &table;
  return tape.record(std::move(out), {tape.param(table)}, [ids, tp, d](Tape& t, const Tensor&, const Tensor& g) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      t.accumulate_rows(*tp, ids[i], std::span<const double>(g.data() + i * d, d));
  });
}

Var gather(Var a, std::span<const std::size_t> indices) {
  const Tensor& x = a.value();
  Tensor out({1, indices.size()});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.size())
      throw ShapeError("gather: index " + std::to_string(indices[i]) + " outside " + shape_string(x.shape()));
    out[i] = x[indices[i]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return a.tape().record(std::move(out), {a}, [a, idx](Tape& t, const Tensor&, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
  });
}

Var dropout(Var a, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw Error("dropout rate must be in [0, 1)");
  if (!train || rate == 0.0) return a;
  const Tensor& x = a.value();
  Tensor mask(matrix_shape(x));
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  Tensor out(matrix_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
  return a.tape().record(std::move(out), {a}, [a, mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
    if (!a.tracked()) return;
    Tensor& ga = t.grad(a.id());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var binary_cross_entropy(Var logits, const Tensor& labels) {
  const Tensor& x = logits.value();
  if (x.size() != labels.size()) mismatch("binary_cross_entropy", x, labels);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // -log sigmoid(x) = softplus(-x); -log(1 - sigmoid(x)) = softplus(x)
    loss += labels[i] * softplus(-x[i]) + (1.0 - labels[i]) * softplus(x[i]);
  }
  return logits.tape().record(Tensor::scalar(loss), {logits},
                              [logits, labels](Tape& t, const Tensor&, const Tensor& g) {
                                if (!logits.tracked()) return;
                                const Tensor& x = logits.value();
                                Tensor& gx = t.grad(logits.id());
                                for (std::size_t i = 0; i < x.size(); ++i)
                                  gx[i] += g[0] * (ksaqa::sigmoid(x[i]) - labels[i]);
                              });
}

}  // namespace ops
}  // namespace ksaqa
