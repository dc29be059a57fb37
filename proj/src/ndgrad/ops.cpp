#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "mcgan/error.hpp"
#include "mcgan/ndgrad.hpp"

namespace mcgan::ndgrad {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Tape* common_tape(const std::vector<const Tensor*>& operands) {
  Tape* tape = nullptr;
  for (const Tensor* t : operands) {
    if (!t->attached()) continue;
    if (tape != nullptr && tape != t->tape()) {
      throw ShapeError("operands recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

// Build the result; the backward closure is only kept when some operand is
// on a tape.
Tensor make(Shape shape, std::vector<double> data,
            const std::vector<const Tensor*>& operands, BackwardFn backward) {
  Tape* tape = common_tape(operands);
  if (tape == nullptr) return Tensor(std::move(shape), std::move(data));
  return tape->record(std::move(shape), std::move(data), operands,
                      std::move(backward));
}

// Keeps an operand's buffer alive inside a backward closure.
struct Held {
  Tensor t;
  explicit Held(const Tensor& x) : t(x.detach()) {}
  std::span<const double> v() const { return t.data(); }
};

std::string where(const char* op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " +
         shape_string(a.shape()) + " and " + shape_string(b.shape());
}

enum class Bcast { same, left_scalar, right_scalar };

Bcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::same;
  // With two single-element operands the higher-rank shape wins.
  if (a.size() == 1 && (b.size() != 1 || b.rank() > a.rank()))
    return Bcast::left_scalar;
  if (b.size() == 1) return Bcast::right_scalar;
  throw ShapeError(where(op, a, b));
}

const Shape& result_shape(Bcast k, const Tensor& a, const Tensor& b) {
  return k == Bcast::left_scalar ? b.shape() : a.shape();
}

template <class F>
std::vector<double> map_values(const Tensor& x, F f) {
  std::vector<double> out(x.size());
  auto v = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(v[i]);
  return out;
}

void require_matrix(const char* op, const Tensor& x) {
  if (x.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " +
                     shape_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise binary

Tensor add(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("add", a, b);
  const Shape shape = result_shape(k, a, b);
  const std::size_t n = k == Bcast::left_scalar ? b.size() : a.size();
  std::vector<double> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = av[k == Bcast::left_scalar ? 0 : i] +
             bv[k == Bcast::right_scalar ? 0 : i];
  }
  return make(shape, std::move(out), {&a, &b},
              [k](std::span<const double> g, std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                  if (!s[0].empty()) s[0][k == Bcast::left_scalar ? 0 : i] += g[i];
                  if (!s[1].empty()) s[1][k == Bcast::right_scalar ? 0 : i] += g[i];
                }
              });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("sub", a, b);
  const Shape shape = result_shape(k, a, b);
  const std::size_t n = k == Bcast::left_scalar ? b.size() : a.size();
  std::vector<double> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = av[k == Bcast::left_scalar ? 0 : i] -
             bv[k == Bcast::right_scalar ? 0 : i];
  }
  return make(shape, std::move(out), {&a, &b},
              [k](std::span<const double> g, std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                  if (!s[0].empty()) s[0][k == Bcast::left_scalar ? 0 : i] += g[i];
                  if (!s[1].empty()) s[1][k == Bcast::right_scalar ? 0 : i] -= g[i];
                }
              });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Bcast k = broadcast_kind("mul", a, b);
  const Shape shape = result_shape(k, a, b);
  const std::size_t n = k == Bcast::left_scalar ? b.size() : a.size();
  std::vector<double> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = av[k == Bcast::left_scalar ? 0 : i] *
             bv[k == Bcast::right_scalar ? 0 : i];
  }
  return make(shape, std::move(out), {&a, &b},
              [k, ha = Held(a), hb = Held(b)](std::span<const double> g,
                                              std::span<const GradSlot> s) {
                auto av = ha.v();
                auto bv = hb.v();
                for (std::size_t i = 0; i < g.size(); ++i) {
                  const std::size_t ia = k == Bcast::left_scalar ? 0 : i;
                  const std::size_t ib = k == Bcast::right_scalar ? 0 : i;
                  if (!s[0].empty()) s[0][ia] += g[i] * bv[ib];
                  if (!s[1].empty()) s[1][ib] += g[i] * av[ia];
                }
              });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) throw ShapeError(where("matmul", a, b));
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  if (k > 0) {
    MutMap(out.data(), n, m).noalias() =
        ConstMap(a.data().data(), n, k) * ConstMap(b.data().data(), k, m);
  }
  return make({n, m}, std::move(out), {&a, &b},
              [n, k, m, ha = Held(a), hb = Held(b)](
                  std::span<const double> g, std::span<const GradSlot> s) {
                ConstMap gm(g.data(), n, m);
                if (!s[0].empty() && k > 0) {
                  MutMap(s[0].data(), n, k).noalias() +=
                      gm * ConstMap(hb.v().data(), k, m).transpose();
                }
                if (!s[1].empty() && k > 0) {
                  MutMap(s[1].data(), k, m).noalias() +=
                      ConstMap(ha.v().data(), n, k).transpose() * gm;
                }
              });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix("add_bias", x);
  if (bias.size() != x.cols()) throw ShapeError(where("add_bias", x, bias));
  const std::size_t n = x.rows(), m = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  auto bv = bias.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += bv[c];
  return make(x.shape(), std::move(out), {&x, &bias},
              [n, m](std::span<const double> g, std::span<const GradSlot> s) {
                if (!s[0].empty())
                  for (std::size_t i = 0; i < g.size(); ++i) s[0][i] += g[i];
                if (!s[1].empty())
                  for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < m; ++c)
                      s[1][c] += g[r * m + c];
              });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return make({}, {acc}, {&x},
              [](std::span<const double> g, std::span<const GradSlot> s) {
                for (double& v : s[0]) v += g[0];
              });
}

Tensor mean(const Tensor& x) {
  if (x.empty()) throw ShapeError("mean: empty tensor");
  const double n = static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return make({}, {acc / n}, {&x},
              [n](std::span<const double> g, std::span<const GradSlot> s) {
                for (double& v : s[0]) v += g[0] / n;
              });
}

Tensor row_mean(const Tensor& x) {
  require_matrix("row_mean", x);
  const std::size_t n = x.rows(), m = x.cols();
  if (m == 0) throw ShapeError("row_mean: zero columns");
  std::vector<double> out(n, 0.0);
  auto v = x.data();
  for (std::size_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) acc += v[r * m + c];
    out[r] = acc / static_cast<double>(m);
  }
  return make({n, 1}, std::move(out), {&x},
              [n, m](std::span<const double> g, std::span<const GradSlot> s) {
                const double w = 1.0 / static_cast<double>(m);
                for (std::size_t r = 0; r < n; ++r)
                  for (std::size_t c = 0; c < m; ++c)
                    s[0][r * m + c] += g[r] * w;
              });
}

// ---------------------------------------------------------------------------
// Elementwise unary

Tensor square(const Tensor& x) {
  return make(x.shape(), map_values(x, [](double v) { return v * v; }), {&x},
              [hx = Held(x)](std::span<const double> g,
                             std::span<const GradSlot> s) {
                auto v = hx.v();
                for (std::size_t i = 0; i < g.size(); ++i)
                  s[0][i] += 2.0 * v[i] * g[i];
              });
}

Tensor sigmoid(const Tensor& x) {
  auto out = map_values(x, [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  auto y = std::make_shared<const std::vector<double>>(out);
  return make(x.shape(), std::move(out), {&x},
              [y](std::span<const double> g, std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  s[0][i] += g[i] * (*y)[i] * (1.0 - (*y)[i]);
              });
}

Tensor tanh(const Tensor& x) {
  auto out = map_values(x, [](double v) { return std::tanh(v); });
  auto y = std::make_shared<const std::vector<double>>(out);
  return make(x.shape(), std::move(out), {&x},
              [y](std::span<const double> g, std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  s[0][i] += g[i] * (1.0 - (*y)[i] * (*y)[i]);
              });
}

Tensor relu(const Tensor& x) {
  return make(x.shape(), map_values(x, [](double v) { return v > 0 ? v : 0.0; }),
              {&x},
              [hx = Held(x)](std::span<const double> g,
                             std::span<const GradSlot> s) {
                auto v = hx.v();
                for (std::size_t i = 0; i < g.size(); ++i)
                  if (v[i] > 0) s[0][i] += g[i];
              });
}

Tensor prelu(const Tensor& x, const Tensor& alpha) {
  if (alpha.size() != 1) {
    throw ShapeError("prelu: slope must be a single value, got " +
                     shape_string(alpha.shape()));
  }
  const double a = alpha[0];
  return make(x.shape(),
              map_values(x, [a](double v) { return v > 0 ? v : a * v; }),
              {&x, &alpha},
              [a, hx = Held(x)](std::span<const double> g,
                                std::span<const GradSlot> s) {
                auto v = hx.v();
                double da = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                  if (v[i] > 0) {
                    if (!s[0].empty()) s[0][i] += g[i];
                  } else {
                    if (!s[0].empty()) s[0][i] += a * g[i];
                    da += v[i] * g[i];
                  }
                }
                if (!s[1].empty()) s[1][0] += da;
              });
}

Tensor log(const Tensor& x) {
  return make(x.shape(), map_values(x, [](double v) { return std::log(v); }),
              {&x},
              [hx = Held(x)](std::span<const double> g,
                             std::span<const GradSlot> s) {
                auto v = hx.v();
                for (std::size_t i = 0; i < g.size(); ++i) s[0][i] += g[i] / v[i];
              });
}

Tensor exp(const Tensor& x) {
  auto out = map_values(x, [](double v) { return std::exp(v); });
  auto y = std::make_shared<const std::vector<double>>(out);
  return make(x.shape(), std::move(out), {&x},
              [y](std::span<const double> g, std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  s[0][i] += g[i] * (*y)[i];
              });
}

Tensor maximum(const Tensor& x, double c) {
  return make(x.shape(),
              map_values(x, [c](double v) { return v > c ? v : c; }), {&x},
              [c, hx = Held(x)](std::span<const double> g,
                                std::span<const GradSlot> s) {
                auto v = hx.v();
                for (std::size_t i = 0; i < g.size(); ++i)
                  if (v[i] > c) s[0][i] += g[i];
              });
}

// ---------------------------------------------------------------------------
// Structural

Tensor concat_cols(std::span<const Tensor> parts) {
  std::vector<const Tensor*> ops;
  std::size_t rows = 0;
  bool have_rows = false;
  for (const auto& p : parts) {
    if (p.empty() && p.rank() != 2) continue;
    require_matrix("concat_cols", p);
    if (!have_rows) {
      rows = p.rows();
      have_rows = true;
    } else if (p.rows() != rows) {
      throw ShapeError(where("concat_cols", *ops.front(), p));
    }
    ops.push_back(&p);
  }
  if (ops.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor* p : ops) {
    widths.push_back(p->cols());
    total += p->cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    auto v = ops[k]->data();
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    offset += w;
  }
  return make({rows, total}, std::move(out), ops,
              [rows, total, widths](std::span<const double> g,
                                    std::span<const GradSlot> s) {
                std::size_t off = 0;
                for (std::size_t k = 0; k < widths.size(); ++k) {
                  const std::size_t w = widths[k];
                  if (!s[k].empty())
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t c = 0; c < w; ++c)
                        s[k][r * w + c] += g[r * total + off + c];
                  off += w;
                }
              });
}

Tensor concat_cols(std::initializer_list<Tensor> parts) {
  return concat_cols(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  std::vector<const Tensor*> ops;
  std::size_t cols = 0;
  bool have_cols = false;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_matrix("concat_rows", p);
    if (!have_cols) {
      cols = p.cols();
      have_cols = true;
    } else if (p.cols() != cols) {
      throw ShapeError(where("concat_rows", *ops.front(), p));
    }
    rows += p.rows();
    ops.push_back(&p);
  }
  if (ops.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  std::vector<double> out;
  out.reserve(rows * cols);
  std::vector<std::size_t> sizes;
  for (const Tensor* p : ops) {
    out.insert(out.end(), p->data().begin(), p->data().end());
    sizes.push_back(p->size());
  }
  return make({rows, cols}, std::move(out), ops,
              [sizes](std::span<const double> g, std::span<const GradSlot> s) {
                std::size_t off = 0;
                for (std::size_t k = 0; k < sizes.size(); ++k) {
                  if (!s[k].empty())
                    for (std::size_t i = 0; i < sizes[k]; ++i)
                      s[k][i] += g[off + i];
                  off += sizes[k];
                }
              });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", x);
  if (begin > end || end > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") outside " +
                     shape_string(x.shape()));
  }
  const std::size_t n = x.rows(), m = x.cols(), w = end - begin;
  std::vector<double> out(n * w);
  auto v = x.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = v[r * m + begin + c];
  return make({n, w}, std::move(out), {&x},
              [n, m, w, begin](std::span<const double> g,
                               std::span<const GradSlot> s) {
                for (std::size_t r = 0; r < n; ++r)
                  for (std::size_t c = 0; c < w; ++c)
                    s[0][r * m + begin + c] += g[r * w + c];
              });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", x);
  if (begin > end || end > x.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") outside " +
                     shape_string(x.shape()));
  }
  const std::size_t m = x.cols();
  std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * m),
                          x.data().begin() + static_cast<std::ptrdiff_t>(end * m));
  return make({end - begin, m}, std::move(out), {&x},
              [m, begin](std::span<const double> g,
                         std::span<const GradSlot> s) {
                for (std::size_t i = 0; i < g.size(); ++i)
                  s[0][begin * m + i] += g[i];
              });
}

// ---------------------------------------------------------------------------
// Composites

Tensor neg(const Tensor& x) { return mul(x, Tensor::scalar(-1.0)); }
Tensor scale(const Tensor& x, double c) { return mul(x, Tensor::scalar(c)); }
Tensor shift(const Tensor& x, double c) { return add(x, Tensor::scalar(c)); }
Tensor minimum(const Tensor& x, double c) { return neg(maximum(neg(x), -c)); }

Tensor softplus(const Tensor& x) {
  // max(x,0) + log(1 + exp(-|x|))
  const Tensor pos = relu(x);
  const Tensor abs = add(pos, relu(neg(x)));
  return add(pos, log(shift(exp(neg(abs)), 1.0)));
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator-(const Tensor& x) { return neg(x); }
Tensor operator+(const Tensor& x, double c) { return shift(x, c); }
Tensor operator+(double c, const Tensor& x) { return shift(x, c); }
Tensor operator-(const Tensor& x, double c) { return shift(x, -c); }
Tensor operator-(double c, const Tensor& x) { return shift(neg(x), c); }
Tensor operator*(const Tensor& x, double c) { return scale(x, c); }
Tensor operator*(double c, const Tensor& x) { return scale(x, c); }

}  // namespace mcgan::ndgrad
