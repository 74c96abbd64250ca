// SPDX-License-Identifier: Apache-2.0
#include "geofno/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "geofno/error.hpp"
#include "geofno/tape.hpp"

namespace geofno::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatC = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<const RowMat>;
using MapC = Eigen::Map<RowMatC>;
using CMapC = Eigen::Map<const RowMatC>;

complex* as_complex(std::span<double> s) { return reinterpret_cast<complex*>(s.data()); }
const complex* as_complex(std::span<const double> s) { return reinterpret_cast<const complex*>(s.data()); }

Tensor finish(Tensor out, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn, const char* name) {
  detail::check_finite(out, name);
  return detail::record(std::move(out), inputs, std::move(fn));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// Broadcast plan for a binary op: output takes the larger operand's shape;
// the smaller one is indexed modulo its element count.
struct Broadcast {
  Shape out_shape;
  std::size_t n = 0;
  std::size_t na = 0;
  std::size_t nb = 0;
};

Broadcast plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw DtypeError(std::string(op) + ": dtype mismatch " + to_string(a.dtype()) + " vs " + to_string(b.dtype()));
  }
  Broadcast p;
  p.na = a.numel();
  p.nb = b.numel();
  if (a.shape() == b.shape() || p.nb == 1 || is_suffix(b.shape(), a.shape())) {
    p.out_shape = a.shape();
  } else if (p.na == 1 || is_suffix(a.shape(), b.shape())) {
    p.out_shape = b.shape();
  } else {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " are not broadcast-compatible");
  }
  p.n = shape_numel(p.out_shape);
  return p;
}

template <typename T>
const T* typed(std::span<const double> s) {
  if constexpr (std::is_same_v<T, double>) {
    return s.data();
  } else {
    return as_complex(s);
  }
}

template <typename T>
T* typed(std::span<double> s) {
  if constexpr (std::is_same_v<T, double>) {
    return s.data();
  } else {
    return as_complex(s);
  }
}

template <typename T>
T conj_if(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

template <typename T>
std::vector<double> raw_from(std::vector<T> values) {
  if constexpr (std::is_same_v<T, double>) {
    return values;
  } else {
    std::vector<double> raw(values.size() * 2);
    std::memcpy(raw.data(), values.data(), raw.size() * sizeof(double));
    return raw;
  }
}

enum class BinaryKind { kAdd, kSub, kMul };

template <typename T>
Tensor binary_typed(BinaryKind kind, const Tensor& a, const Tensor& b, const Broadcast& p, const char* name) {
  const T* x = typed<T>(a.raw());
  const T* y = typed<T>(b.raw());
  std::vector<T> out(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const T& u = x[i % p.na];
    const T& v = y[i % p.nb];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = u + v; break;
      case BinaryKind::kSub: out[i] = u - v; break;
      case BinaryKind::kMul: out[i] = u * v; break;
    }
  }
  const Dtype dtype = a.dtype();
  Tensor result = Tensor::from_raw(p.out_shape, dtype, raw_from(std::move(out)));
  return finish(
      std::move(result), {a, b},
      [kind, a, b, p](std::span<const double> g_raw, std::span<const std::span<double>> gin) {
        const T* g = typed<T>(g_raw);
        const T* x = typed<T>(a.raw());
        const T* y = typed<T>(b.raw());
        if (!gin[0].empty()) {
          T* ga = typed<T>(gin[0]);
          for (std::size_t i = 0; i < p.n; ++i) {
            switch (kind) {
              case BinaryKind::kAdd:
              case BinaryKind::kSub: ga[i % p.na] += g[i]; break;
              case BinaryKind::kMul: ga[i % p.na] += g[i] * conj_if(y[i % p.nb]); break;
            }
          }
        }
        if (!gin[1].empty()) {
          T* gb = typed<T>(gin[1]);
          for (std::size_t i = 0; i < p.n; ++i) {
            switch (kind) {
              case BinaryKind::kAdd: gb[i % p.nb] += g[i]; break;
              case BinaryKind::kSub: gb[i % p.nb] -= g[i]; break;
              case BinaryKind::kMul: gb[i % p.nb] += g[i] * conj_if(x[i % p.na]); break;
            }
          }
        }
      },
      name);
}

Tensor binary(BinaryKind kind, const Tensor& a, const Tensor& b, const char* name) {
  const Broadcast p = plan_broadcast(a, b, name);
  if (a.is_complex()) return binary_typed<complex>(kind, a, b, p, name);
  return binary_typed<double>(kind, a, b, p, name);
}

// Unary real map with derivative f'(x) evaluated from the input.
template <typename F, typename DF>
Tensor unary_real(const Tensor& a, F f, DF df, const char* name) {
  if (a.is_complex()) throw DtypeError(std::string(name) + " requires a real64 tensor");
  auto x = a.real();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return finish(
      Tensor(a.shape(), std::move(out)), {a},
      [a, df](std::span<const double> g, std::span<const std::span<double>> gin) {
        auto x = a.real();
        for (std::size_t i = 0; i < x.size(); ++i) gin[0][i] += g[i] * df(x[i]);
      },
      name);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Tensor elementwise(Elementwise op, const Tensor& a, const std::optional<Tensor>& b) {
  auto need_b = [&]() -> const Tensor& {
    if (!b) throw DimensionError("binary elementwise op requires a second operand");
    return *b;
  };
  switch (op) {
    case Elementwise::kAdd: return add(a, need_b());
    case Elementwise::kSub: return sub(a, need_b());
    case Elementwise::kMul: return mul(a, need_b());
    case Elementwise::kGelu: return gelu(a);
    case Elementwise::kSin: return sin(a);
  }
  throw DimensionError("unknown elementwise op");
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kAdd, a, b, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kSub, a, b, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(BinaryKind::kMul, a, b, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  auto x = a.raw();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
  return finish(
      Tensor::from_raw(a.shape(), a.dtype(), std::move(out)), {a},
      [factor](std::span<const double> g, std::span<const std::span<double>> gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i] * factor;
      },
      "scale");
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary_real(a, [value](double x) { return x + value; }, [](double) { return 1.0; }, "add_scalar");
}

Tensor square(const Tensor& a) {
  return unary_real(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; }, "square");
}

Tensor gelu(const Tensor& a) {
  return unary_real(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x); },
      "gelu");
}

Tensor sin(const Tensor& a) {
  return unary_real(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, "sin");
}

Tensor cos(const Tensor& a) {
  return unary_real(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); }, "cos");
}

Tensor wrap_unit(const Tensor& a) {
  return unary_real(a, [](double x) { return x - std::floor(x); }, [](double) { return 1.0; }, "wrap_unit");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul expects 2-D operands");
  if (a.dtype() != b.dtype()) throw DtypeError("matmul: dtype mismatch");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  const auto im = static_cast<Eigen::Index>(m), ik = static_cast<Eigen::Index>(k), in = static_cast<Eigen::Index>(n);
  if (!a.is_complex()) {
    std::vector<double> out(m * n);
    MapR(out.data(), im, in).noalias() = CMapR(a.real().data(), im, ik) * CMapR(b.real().data(), ik, in);
    return finish(
        Tensor({m, n}, std::move(out)), {a, b},
        [a, b, im, ik, in](std::span<const double> g, std::span<const std::span<double>> gin) {
          CMapR G(g.data(), im, in);
          if (!gin[0].empty()) MapR(gin[0].data(), im, ik).noalias() += G * CMapR(b.real().data(), ik, in).transpose();
          if (!gin[1].empty()) MapR(gin[1].data(), ik, in).noalias() += CMapR(a.real().data(), im, ik).transpose() * G;
        },
        "matmul");
  }
  std::vector<complex> out(m * n);
  MapC(out.data(), im, in).noalias() = CMapC(a.cplx().data(), im, ik) * CMapC(b.cplx().data(), ik, in);
  return finish(
      Tensor({m, n}, std::move(out)), {a, b},
      [a, b, im, ik, in](std::span<const double> g, std::span<const std::span<double>> gin) {
        CMapC G(as_complex(g), im, in);
        if (!gin[0].empty()) MapC(as_complex(gin[0]), im, ik).noalias() += G * CMapC(b.cplx().data(), ik, in).adjoint();
        if (!gin[1].empty()) MapC(as_complex(gin[1]), ik, in).noalias() += CMapC(a.cplx().data(), im, ik).adjoint() * G;
      },
      "matmul");
}

Tensor linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias) {
  if (x.is_complex() || weight.is_complex()) throw DtypeError("linear expects real64 tensors");
  if (x.rank() < 1 || weight.rank() != 2) throw DimensionError("linear expects x[..., in] and W[in, out]");
  const std::size_t in = x.shape().back();
  if (weight.dim(0) != in) {
    throw DimensionError("linear: input width " + std::to_string(in) + " does not match weight " +
                         shape_string(weight.shape()));
  }
  const std::size_t out_w = weight.dim(1);
  if (bias && (bias->rank() != 1 || bias->dim(0) != out_w)) {
    throw DimensionError("linear: bias must have shape [" + std::to_string(out_w) + "]");
  }
  const std::size_t rows = x.numel() / std::max<std::size_t>(in, 1);
  Shape out_shape = x.shape();
  out_shape.back() = out_w;
  const auto ir = static_cast<Eigen::Index>(rows), ii = static_cast<Eigen::Index>(in),
             io = static_cast<Eigen::Index>(out_w);
  std::vector<double> out(rows * out_w);
  MapR Y(out.data(), ir, io);
  Y.noalias() = CMapR(x.real().data(), ir, ii) * CMapR(weight.real().data(), ii, io);
  if (bias) Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias->real().data(), io);
  Tensor result(std::move(out_shape), std::move(out));
  detail::check_finite(result, "linear");
  auto fn = [x, weight, ir, ii, io](std::span<const double> g, std::span<const std::span<double>> gin) {
    CMapR G(g.data(), ir, io);
    if (!gin[0].empty()) MapR(gin[0].data(), ir, ii).noalias() += G * CMapR(weight.real().data(), ii, io).transpose();
    if (!gin[1].empty()) MapR(gin[1].data(), ii, io).noalias() += CMapR(x.real().data(), ir, ii).transpose() * G;
    if (gin.size() > 2 && !gin[2].empty()) {
      Eigen::Map<Eigen::RowVectorXd>(gin[2].data(), io) += G.colwise().sum();
    }
  };
  if (bias) return detail::record(std::move(result), {x, weight, *bias}, fn);
  return detail::record(std::move(result), {x, weight}, fn);
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("cannot reshape " + shape_string(a.shape()) + " into " + shape_string(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->dtype = a.dtype();
  node->data = a.node()->data;
  return detail::record(Tensor(std::move(node)), {a},
                        [](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += g[i];
                        });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_last needs at least one tensor");
  const Dtype dtype = parts[0].dtype();
  const std::size_t width = dtype == Dtype::kComplex128 ? 2 : 1;
  Shape lead = parts[0].shape();
  if (lead.empty()) throw DimensionError("concat_last needs tensors of rank >= 1");
  lead.pop_back();
  const std::size_t rows = shape_numel(lead);
  std::vector<std::size_t> cols;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape l = p.shape();
    if (l.empty()) throw DimensionError("concat_last needs tensors of rank >= 1");
    const std::size_t c = l.back();
    l.pop_back();
    if (l != lead) throw DimensionError("concat_last: leading dimensions differ");
    if (p.dtype() != dtype) throw DtypeError("concat_last: dtype mismatch");
    cols.push_back(c);
    total += c;
  }
  std::vector<double> out(rows * total * width);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto src = parts[p].raw();
    const std::size_t c = cols[p] * width;
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.data() + r * c, c, out.data() + r * total * width + offset);
    }
    offset += c;
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor result = Tensor::from_raw(std::move(out_shape), dtype, std::move(out));
  detail::check_finite(result, "concat_last");
  return detail::record(std::move(result), parts,
                        [cols, rows, total, width](std::span<const double> g, std::span<const std::span<double>> gin) {
                          std::size_t offset = 0;
                          for (std::size_t p = 0; p < cols.size(); ++p) {
                            const std::size_t c = cols[p] * width;
                            if (!gin[p].empty()) {
                              for (std::size_t r = 0; r < rows; ++r) {
                                const double* src = g.data() + r * total * width + offset;
                                double* dst = gin[p].data() + r * c;
                                for (std::size_t i = 0; i < c; ++i) dst[i] += src[i];
                              }
                            }
                            offset += c;
                          }
                        });
}

Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() < 1) throw DimensionError("slice_last needs rank >= 1");
  const std::size_t c = a.shape().back();
  if (begin > end || end > c) throw DimensionError("slice_last: range out of bounds");
  const std::size_t width = a.is_complex() ? 2 : 1;
  const std::size_t rows = a.numel() / std::max<std::size_t>(c, 1);
  const std::size_t w = end - begin;
  auto src = a.raw();
  std::vector<double> out(rows * w * width);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(src.data() + (r * c + begin) * width, w * width, out.data() + r * w * width);
  }
  Shape shape = a.shape();
  shape.back() = w;
  return detail::record(Tensor::from_raw(std::move(shape), a.dtype(), std::move(out)), {a},
                        [rows, c, w, begin, width](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t i = 0; i < w * width; ++i) {
                              gin[0][(r * c + begin) * width + i] += g[r * w * width + i];
                            }
                          }
                        });
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("stack needs at least one tensor");
  const Shape inner = parts[0].shape();
  const Dtype dtype = parts[0].dtype();
  const std::size_t len = parts[0].raw().size();
  std::vector<double> out;
  out.reserve(len * parts.size());
  for (const auto& p : parts) {
    if (p.shape() != inner || p.dtype() != dtype) throw DimensionError("stack: tensors must share shape and dtype");
    auto r = p.raw();
    out.insert(out.end(), r.begin(), r.end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  return detail::record(Tensor::from_raw(std::move(shape), dtype, std::move(out)), parts,
                        [len](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t p = 0; p < gin.size(); ++p) {
                            if (gin[p].empty()) continue;
                            for (std::size_t i = 0; i < len; ++i) gin[p][i] += g[p * len + i];
                          }
                        });
}

Tensor select(const Tensor& a, std::size_t index) {
  if (a.rank() < 1 || index >= a.dim(0)) throw DimensionError("select: index out of range");
  Shape inner(a.shape().begin() + 1, a.shape().end());
  const std::size_t len = a.raw().size() / a.dim(0);
  auto src = a.raw().subspan(index * len, len);
  return detail::record(Tensor::from_raw(std::move(inner), a.dtype(), {src.begin(), src.end()}), {a},
                        [index, len](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < len; ++i) gin[0][index * len + i] += g[i];
                        });
}

Tensor repeat_rows(const Tensor& v, std::size_t rows) {
  if (v.rank() != 1 || v.is_complex()) throw DimensionError("repeat_rows expects a real vector");
  const std::size_t c = v.dim(0);
  auto src = v.real();
  std::vector<double> out(rows * c);
  for (std::size_t r = 0; r < rows; ++r) std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(r * c));
  return detail::record(Tensor({rows, c}, std::move(out)), {v},
                        [rows, c](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < c; ++j) gin[0][j] += g[r * c + j];
                          }
                        });
}

Tensor expand_rows(const Tensor& a, std::size_t n) {
  if (a.rank() != 2 || a.is_complex()) throw DimensionError("expand_rows expects a real [B x C] matrix");
  const std::size_t b = a.dim(0), c = a.dim(1);
  auto src = a.real();
  std::vector<double> out(b * n * c);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t r = 0; r < n; ++r) std::copy_n(src.data() + i * c, c, out.data() + (i * n + r) * c);
  }
  return detail::record(Tensor({b, n, c}, std::move(out)), {a},
                        [b, n, c](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < b; ++i) {
                            for (std::size_t r = 0; r < n; ++r) {
                              for (std::size_t j = 0; j < c; ++j) gin[0][i * c + j] += g[(i * n + r) * c + j];
                            }
                          }
                        });
}

Tensor sum(const Tensor& a) {
  if (a.is_complex()) throw DtypeError("sum expects a real64 tensor");
  double s = 0.0;
  for (double v : a.real()) s += v;
  return finish(Tensor::scalar(s), {a},
                [](std::span<const double> g, std::span<const std::span<double>> gin) {
                  for (auto& v : gin[0]) v += g[0];
                },
                "sum");
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor real_part(const Tensor& a) {
  auto c = a.cplx();
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return detail::record(Tensor(a.shape(), std::move(out)), {a},
                        [](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < g.size(); ++i) gin[0][2 * i] += g[i];
                        });
}

Tensor imag_part(const Tensor& a) {
  auto c = a.cplx();
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].imag();
  return detail::record(Tensor(a.shape(), std::move(out)), {a},
                        [](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < g.size(); ++i) gin[0][2 * i + 1] += g[i];
                        });
}

Tensor to_complex(const Tensor& a) {
  auto r = a.real();
  std::vector<double> out(r.size() * 2, 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) out[2 * i] = r[i];
  return detail::record(Tensor::from_raw(a.shape(), Dtype::kComplex128, std::move(out)), {a},
                        [](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < gin[0].size(); ++i) gin[0][i] += g[2 * i];
                        });
}

}  // namespace geofno::ops
