// SPDX-License-Identifier: Apache-2.0
#include "tea/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tea/error.hpp"

namespace tea::ad {
namespace {

[[noreturn]] void shape_fail(const char* kind, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(kind) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

[[noreturn]] void shape_fail(const char* kind, const Shape& a) {
  throw ShapeError(std::string(kind) + ": unsupported shape " + shape_string(a));
}

// Logical (rows x cols) view over a row-major buffer, optionally transposed.
struct MatView {
  const double* p;
  std::size_t rows, cols;
  bool trans;
  double operator()(std::size_t r, std::size_t c) const { return trans ? p[c * rows + r] : p[r * cols + c]; }
};

MatView view(const Tensor& t, bool as_row_vector, bool trans) {
  std::size_t r = 0, c = 0;
  if (t.rank() == 2) {
    r = t.shape()[0];
    c = t.shape()[1];
  } else if (as_row_vector) {
    r = 1;
    c = t.size();
  } else {
    r = t.size();
    c = 1;
  }
  if (trans) return MatView{t.data(), c, r, true};
  return MatView{t.data(), r, c, false};
}

// out[r x c] += A[r x k] * B[k x c]
void gemm_acc(double* out, const MatView& a, const MatView& b) {
  const std::size_t r = a.rows, k = a.cols, c = b.cols;
  if (b.trans && !a.trans) {
    // B is stored as [c x k]: every output entry is a contiguous dot product.
    for (std::size_t i = 0; i < r; ++i) {
      const double* arow = a.p + i * k;
      double* orow = out + i * c;
      for (std::size_t j = 0; j < c; ++j) {
        const double* brow = b.p + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        orow[j] += s;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < r; ++i) {
    double* orow = out + i * c;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      if (!b.trans) {
        const double* brow = b.p + p * c;
        for (std::size_t j = 0; j < c; ++j) orow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < c; ++j) orow[j] += av * b(p, j);
      }
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary_elementwise(Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return a.tape().record(std::move(y), {a}, [a, deriv](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(a.id())) return;
    const Tensor& x = tape.value(a.id());
    const Tensor& y = tape.value(self);
    const Tensor& g = tape.adjoint(self);
    Tensor& ga = tape.adjoint(a.id());
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && a.shape()[1] == b.shape()[0];
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() < 1 || av.rank() > 2 || bv.rank() < 1 || bv.rank() > 2 || (av.rank() == 1 && bv.rank() == 1)) {
    shape_fail("matmul", av.shape(), bv.shape());
  }
  const MatView A = view(av, true, false);
  const MatView B = view(bv, false, false);
  if (A.cols != B.rows) shape_fail("matmul", av.shape(), bv.shape());
  Shape out_shape;
  if (av.rank() == 2 && bv.rank() == 2) out_shape = {A.rows, B.cols};
  else if (av.rank() == 2) out_shape = {A.rows};
  else out_shape = {B.cols};
  Tensor out(out_shape);
  gemm_acc(out.data(), A, B);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, std::size_t self) {
    const Tensor& av = tape.value(a.id());
    const Tensor& bv = tape.value(b.id());
    const Tensor& g = tape.adjoint(self);
    const MatView A = view(av, true, false);
    const MatView B = view(bv, false, false);
    const MatView G{g.data(), A.rows, B.cols, false};
    if (tape.requires_grad(a.id())) {
      // dA = G * B^T
      gemm_acc(tape.adjoint(a.id()).data(), G, view(bv, false, true));
    }
    if (tape.requires_grad(b.id())) {
      // dB = A^T * G
      gemm_acc(tape.adjoint(b.id()).data(), view(av, true, true), G);
    }
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  if (x.rank() != 2) shape_fail("transpose", x.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Tensor y(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y.at(j, i) = x.at(i, j);
  return a.tape().record(std::move(y), {a}, [a, r, c](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(a.id())) return;
    const Tensor& g = tape.adjoint(self);
    Tensor& ga = tape.adjoint(a.id());
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga.at(i, j) += g.at(j, i);
  });
}

namespace {

Var add_or_sub(Var a, Var b, double sign, const char* kind) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = is_row_broadcast(av, bv);
  if (!broadcast && av.shape() != bv.shape()) shape_fail(kind, av.shape(), bv.shape());
  Tensor out = av;
  if (broadcast) {
    for (std::size_t r = 0; r < av.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += sign * bv[j];
    }
  } else {
    out.add_inplace(bv, sign);
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, sign, broadcast](Tape& tape, std::size_t self) {
    const Tensor& g = tape.adjoint(self);
    if (tape.requires_grad(a.id())) tape.adjoint(a.id()).add_inplace(g);
    if (tape.requires_grad(b.id())) {
      Tensor& gb = tape.adjoint(b.id());
      if (broadcast) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto row = g.row(r);
          for (std::size_t j = 0; j < row.size(); ++j) gb[j] += sign * row[j];
        }
      } else {
        gb.add_inplace(g, sign);
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_or_sub(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_or_sub(a, b, -1.0, "sub"); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_fail("mul", av.shape(), bv.shape());
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, std::size_t self) {
    const Tensor& g = tape.adjoint(self);
    const Tensor& av = tape.value(a.id());
    const Tensor& bv = tape.value(b.id());
    if (tape.requires_grad(a.id())) {
      Tensor& ga = tape.adjoint(a.id());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tape.requires_grad(b.id())) {
      Tensor& gb = tape.adjoint(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary_elementwise(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var one_minus(Var a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const Tensor& first = parts.front().value();
  if (first.rank() != 1 && first.rank() != 2) shape_fail("concat", first.shape());
  const std::size_t rows = first.rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (t.rank() != first.rank() || t.rows() != rows) shape_fail("concat", first.shape(), t.shape());
    widths.push_back(t.cols());
    total += t.cols();
  }
  Tensor out(first.rank() == 1 ? Shape{total} : Shape{rows, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < widths[k]; ++j) out[r * total + offset + j] = t[r * widths[k] + j];
    offset += widths[k];
  }
  return parts.front().tape().record(
      std::move(out), parts, [parts, widths, rows, total](Tape& tape, std::size_t self) {
        const Tensor& g = tape.adjoint(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
          if (tape.requires_grad(parts[k].id())) {
            Tensor& gp = tape.adjoint(parts[k].id());
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t j = 0; j < widths[k]; ++j) gp[r * widths[k] + j] += g[r * total + offset + j];
          }
          offset += widths[k];
        }
      });
}

Var stack_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no operands");
  const Tensor& first = parts.front().value();
  const std::size_t cols = first.cols();
  std::size_t rows = 0;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if ((t.rank() != 1 && t.rank() != 2) || t.rank() != first.rank() || t.cols() != cols) {
      shape_fail("stack_rows", first.shape(), t.shape());
    }
    offsets.push_back(rows * cols);
    rows += t.rank() == 1 ? 1 : t.shape()[0];
  }
  Tensor out(Shape{rows, cols});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    std::copy(t.values().begin(), t.values().end(), out.data() + offsets[k]);
  }
  return parts.front().tape().record(std::move(out), parts, [parts, offsets](Tape& tape, std::size_t self) {
    const Tensor& g = tape.adjoint(self);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (!tape.requires_grad(parts[k].id())) continue;
      Tensor& gp = tape.adjoint(parts[k].id());
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
    }
  });
}

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double negative_slope) {
  return unary_elementwise(
      a, [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Var sigmoid(Var a) {
  return unary_elementwise(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var mean_pool(Var a) {
  const Tensor& x = a.value();
  if (x.rank() != 2) shape_fail("mean_pool", x.shape());
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Tensor out(Shape{c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += x.at(i, j);
  const double inv = r ? 1.0 / static_cast<double>(r) : 0.0;
  for (double& v : out.values()) v *= inv;
  return a.tape().record(std::move(out), {a}, [a, r, c, inv](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(a.id())) return;
    const Tensor& g = tape.adjoint(self);
    Tensor& ga = tape.adjoint(a.id());
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga.at(i, j) += inv * g[j];
  });
}

Var gather_rows(Var table, std::vector<std::size_t> rows) {
  const Tensor& t = table.value();
  if (t.rank() != 2) shape_fail("gather_rows", t.shape());
  const std::size_t m = t.shape()[0], d = t.shape()[1];
  Tensor out(Shape{rows.size(), d});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= m) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[k]) + " out of range for table " +
                       shape_string(t.shape()));
    }
    std::copy_n(t.data() + rows[k] * d, d, out.data() + k * d);
  }
  return table.tape().record(std::move(out), {table}, [table, rows = std::move(rows), d](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(table.id())) return;
    const Tensor& g = tape.adjoint(self);
    Tensor& gt = tape.adjoint(table.id());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double* dst = gt.data() + rows[k] * d;
      const double* src = g.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

Var take_row(Var table, std::size_t row) {
  const Tensor& t = table.value();
  if (t.rank() != 2) shape_fail("take_row", t.shape());
  const std::size_t m = t.shape()[0], d = t.shape()[1];
  if (row >= m) throw ShapeError("take_row: row " + std::to_string(row) + " out of range for " + shape_string(t.shape()));
  Tensor out(Shape{d});
  std::copy_n(t.data() + row * d, d, out.data());
  return table.tape().record(std::move(out), {table}, [table, row, d](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(table.id())) return;
    const Tensor& g = tape.adjoint(self);
    double* dst = tape.adjoint(table.id()).data() + row * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
  });
}

Var segment_mean(Var table, std::vector<std::vector<std::size_t>> groups) {
  const Tensor& t = table.value();
  if (t.rank() != 2) shape_fail("segment_mean", t.shape());
  const std::size_t m = t.shape()[0], d = t.shape()[1];
  Tensor out(Shape{groups.size(), d});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    const double inv = 1.0 / static_cast<double>(groups[g].size());
    double* dst = out.data() + g * d;
    for (std::size_t r : groups[g]) {
      if (r >= m) throw ShapeError("segment_mean: row " + std::to_string(r) + " out of range for " + shape_string(t.shape()));
      const double* src = t.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += inv * src[j];
    }
  }
  return table.tape().record(std::move(out), {table}, [table, groups = std::move(groups), d](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(table.id())) return;
    const Tensor& grad = tape.adjoint(self);
    Tensor& gt = tape.adjoint(table.id());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].empty()) continue;
      const double inv = 1.0 / static_cast<double>(groups[g].size());
      const double* src = grad.data() + g * d;
      for (std::size_t r : groups[g]) {
        double* dst = gt.data() + r * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += inv * src[j];
      }
    }
  });
}

Var tile_rows(Var v, std::size_t n) {
  const Tensor& x = v.value();
  if (x.rank() != 1) shape_fail("tile_rows", x.shape());
  const std::size_t d = x.size();
  Tensor out(Shape{n, d});
  for (std::size_t i = 0; i < n; ++i) std::copy_n(x.data(), d, out.data() + i * d);
  return v.tape().record(std::move(out), {v}, [v, n, d](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(v.id())) return;
    const Tensor& g = tape.adjoint(self);
    Tensor& gv = tape.adjoint(v.id());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) gv[j] += g[i * d + j];
  });
}

Var dot(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape() || (av.rank() != 1 && av.rank() != 2)) shape_fail("dot", av.shape(), bv.shape());
  const std::size_t rows = av.rank() == 2 ? av.shape()[0] : 1;
  const std::size_t d = av.cols();
  Tensor out = av.rank() == 2 ? Tensor(Shape{rows}) : Tensor::scalar(0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += av[r * d + j] * bv[r * d + j];
    out[r] = s;
  }
  return a.tape().record(std::move(out), {a, b}, [a, b, rows, d](Tape& tape, std::size_t self) {
    const Tensor& g = tape.adjoint(self);
    const Tensor& av = tape.value(a.id());
    const Tensor& bv = tape.value(b.id());
    if (tape.requires_grad(a.id())) {
      Tensor& ga = tape.adjoint(a.id());
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += g[r] * bv[r * d + j];
    }
    if (tape.requires_grad(b.id())) {
      Tensor& gb = tape.adjoint(b.id());
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) gb[r * d + j] += g[r] * av[r * d + j];
    }
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.values()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(a.id())) return;
    const double g = tape.adjoint(self)[0];
    for (double& v : tape.adjoint(a.id()).values()) v += g;
  });
}

Var masked_softmax(Var logits, std::vector<std::uint8_t> mask) {
  const Tensor& x = logits.value();
  if (x.rank() != 1 && x.rank() != 2) shape_fail("masked_softmax", x.shape());
  if (mask.size() != x.size()) {
    throw ShapeError("masked_softmax: mask has " + std::to_string(mask.size()) + " entries for logits " +
                     shape_string(x.shape()));
  }
  const std::size_t rows = x.rows(), c = x.cols();
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (!mask[r * c + j]) continue;
      any = true;
      mx = std::max(mx, x[r * c + j]);
    }
    if (!any) throw InvalidArgument("masked_softmax: row " + std::to_string(r) + " is fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!mask[r * c + j]) continue;
      const double e = std::exp(x[r * c + j] - mx);
      y[r * c + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) y[r * c + j] /= z;
  }
  return logits.tape().record(std::move(y), {logits}, [logits, rows, c](Tape& tape, std::size_t self) {
    if (!tape.requires_grad(logits.id())) return;
    const Tensor& y = tape.value(self);
    const Tensor& g = tape.adjoint(self);
    Tensor& gx = tape.adjoint(logits.id());
    // Masked entries have y == 0, so they receive no gradient.
    for (std::size_t r = 0; r < rows; ++r) {
      double inner = 0.0;
      for (std::size_t j = 0; j < c; ++j) inner += y[r * c + j] * g[r * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += y[r * c + j] * (g[r * c + j] - inner);
    }
  });
}

Var dropout(Var a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw InvalidArgument("dropout: rate must be in [0, 1)");
  if (p == 0.0) return a;
  Tensor mask(a.shape());
  std::bernoulli_distribution keep(1.0 - p);
  const double inv = 1.0 / (1.0 - p);
  for (double& v : mask.values()) v = keep(rng) ? inv : 0.0;
  return mul(a, a.tape().constant(std::move(mask)));
}

}  // namespace tea::ad
