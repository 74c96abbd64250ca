// SPDX-License-Identifier: Apache-2.0
#include "geofno/spectral.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <numbers>

#include "geofno/error.hpp"
#include "geofno/fft.hpp"
#include "geofno/ops.hpp"
#include "geofno/parallel.hpp"
#include "geofno/rng.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatC = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using CMapC = Eigen::Map<const RowMatC>;
using MapC = Eigen::Map<RowMatC>;
using Stride = Eigen::OuterStride<>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const complex* as_complex(std::span<const double> s) { return reinterpret_cast<const complex*>(s.data()); }
complex* as_complex(std::span<double> s) { return reinterpret_cast<complex*>(s.data()); }

// E[r, i] = exp(-2 pi i <k_r, xi_i>) for the modes [first, first + count).
// Powers of the per-axis unit phase are formed by repeated multiplication;
// at |k| <= a few dozen the accumulated rounding stays near 1e-15.
struct Exponentials {
  RowMat re;
  RowMat im;
};

Exponentials exponentials(const double* xi, std::size_t n, const ModeSet& modes, std::size_t first,
                          std::size_t count) {
  const std::size_t d = modes.dim();
  std::vector<RowMat> tre(d), tim(d);
  for (std::size_t a = 0; a < d; ++a) {
    const int km = modes.k_max()[a];
    const std::size_t rows = 2 * static_cast<std::size_t>(km) + 1;
    tre[a].resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    tim[a].resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = kTwoPi * xi[i * d + a];
      const complex w(std::cos(t), -std::sin(t));
      complex p(1.0, 0.0);
      tre[a](km, i) = 1.0;
      tim[a](km, i) = 0.0;
      for (int k = 1; k <= km; ++k) {
        p *= w;
        tre[a](km + k, i) = p.real();
        tim[a](km + k, i) = p.imag();
        tre[a](km - k, i) = p.real();
        tim[a](km - k, i) = -p.imag();
      }
    }
  }
  Exponentials e;
  e.re.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
  e.im.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < count; ++r) {
    auto k = modes.mode(first + r);
    double* er = e.re.row(static_cast<Eigen::Index>(r)).data();
    double* ei = e.im.row(static_cast<Eigen::Index>(r)).data();
    const double* r0 = tre[0].row(k[0] + modes.k_max()[0]).data();
    const double* i0 = tim[0].row(k[0] + modes.k_max()[0]).data();
    std::copy_n(r0, n, er);
    std::copy_n(i0, n, ei);
    for (std::size_t a = 1; a < d; ++a) {
      const double* ra = tre[a].row(k[a] + modes.k_max()[a]).data();
      const double* ia = tim[a].row(k[a] + modes.k_max()[a]).data();
      for (std::size_t i = 0; i < n; ++i) {
        const double xr = er[i] * ra[i] - ei[i] * ia[i];
        const double xim = er[i] * ia[i] + ei[i] * ra[i];
        er[i] = xr;
        ei[i] = xim;
      }
    }
  }
  return e;
}

// Frequencies of modes [first, first + count) as a real [count x d] matrix.
RowMat frequency_matrix(const ModeSet& modes, std::size_t first, std::size_t count) {
  RowMat k(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(modes.dim()));
  for (std::size_t r = 0; r < count; ++r) {
    auto m = modes.mode(first + r);
    for (std::size_t a = 0; a < modes.dim(); ++a) k(r, a) = m[a];
  }
  return k;
}

RowMatC to_complex_matrix(const Exponentials& e) {
  RowMatC c(e.re.rows(), e.re.cols());
  c.real() = e.re;
  c.imag() = e.im;
  return c;
}

void require_points(const Tensor& xi, std::size_t d, const char* op) {
  if (xi.is_complex() || xi.rank() != 2 || xi.dim(1) != d) {
    throw DimensionError(std::string(op) + ": coordinates must be real [N x " + std::to_string(d) + "], got " +
                         shape_string(xi.shape()));
  }
}

// Flat offsets, within one [s_1 .. s_d x c] grid, of the half-set modes'
// FFT bins (channel 0).
std::vector<std::size_t> half_positions(const ModeSet& modes, const std::vector<std::size_t>& grid, std::size_t c) {
  const std::size_t d = modes.dim();
  std::vector<std::size_t> stride(d);
  std::size_t s = c;
  for (std::size_t a = d; a-- > 0;) {
    stride[a] = s;
    s *= grid[a];
  }
  std::vector<std::size_t> pos(modes.half_size());
  for (std::size_t h = 0; h < pos.size(); ++h) {
    auto k = modes.mode(modes.zero_index() + h);
    std::size_t p = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const long sa = static_cast<long>(grid[a]);
      p += static_cast<std::size_t>(((k[a] % sa) + sa) % sa) * stride[a];
    }
    pos[h] = p;
  }
  return pos;
}

std::vector<std::size_t> spatial_axes(std::size_t d) {
  std::vector<std::size_t> axes(d);
  for (std::size_t a = 0; a < d; ++a) axes[a] = a + 1;
  return axes;
}

}  // namespace

// ---------------------------------------------------------------- ModeSet

ModeSet::ModeSet(std::vector<int> k_max) : k_max_(std::move(k_max)) {
  if (k_max_.empty() || k_max_.size() > 3) throw DimensionError("ModeSet dimension must be 1, 2 or 3");
  count_ = 1;
  for (int k : k_max_) {
    if (k < 0) throw DimensionError("ModeSet: negative k_max");
    count_ *= 2 * static_cast<std::size_t>(k) + 1;
  }
  const std::size_t d = k_max_.size();
  flat_.resize(count_ * d);
  std::vector<int> k(d);
  for (std::size_t a = 0; a < d; ++a) k[a] = -k_max_[a];
  for (std::size_t i = 0; i < count_; ++i) {
    std::copy(k.begin(), k.end(), flat_.begin() + static_cast<std::ptrdiff_t>(i * d));
    for (std::size_t a = d; a-- > 0;) {
      if (++k[a] <= k_max_[a]) break;
      k[a] = -k_max_[a];
    }
  }
}

ModeSet ModeSet::cube(std::size_t dim, int k_max) { return ModeSet(std::vector<int>(dim, k_max)); }

std::span<const int> ModeSet::mode(std::size_t index) const {
  if (index >= count_) throw DimensionError("mode index out of range");
  return {flat_.data() + index * dim(), dim()};
}

std::size_t ModeSet::index_of(std::span<const int> k) const {
  if (k.size() != dim()) throw DimensionError("index_of: frequency vector has the wrong dimension");
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dim(); ++a) {
    if (k[a] < -k_max_[a] || k[a] > k_max_[a]) throw DimensionError("index_of: frequency outside the mode set");
    idx = idx * (2 * static_cast<std::size_t>(k_max_[a]) + 1) + static_cast<std::size_t>(k[a] + k_max_[a]);
  }
  return idx;
}

void ModeSet::check_nyquist(const std::vector<std::size_t>& grid) const {
  if (grid.size() != dim()) {
    throw DimensionError("grid has " + std::to_string(grid.size()) + " axes, modes have " + std::to_string(dim()));
  }
  for (std::size_t a = 0; a < dim(); ++a) {
    if (grid[a] <= 2 * static_cast<std::size_t>(k_max_[a])) {
      throw SamplingError("axis " + std::to_string(a) + ": grid length " + std::to_string(grid[a]) +
                          " cannot resolve k_max " + std::to_string(k_max_[a]) + " (need > 2 k_max)");
    }
  }
}

MonitorWeight MonitorWeight::ones(std::size_t n) { return {Tensor::full({n}, 1.0)}; }

void MonitorWeight::validate(std::size_t n) const {
  if (weights.is_complex() || weights.rank() != 1 || weights.dim(0) != n) {
    throw DimensionError("monitor weight must be real [" + std::to_string(n) + "]");
  }
  for (double w : weights.real()) {
    if (!(w > 0.0) || !std::isfinite(w)) throw WeightError("monitor weights must be positive and finite");
  }
}

Tensor uniform_grid_points(const std::vector<std::size_t>& grid) {
  const std::size_t d = grid.size();
  const std::size_t n = shape_numel(grid);
  std::vector<double> out(n * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) out[i * d + a] = static_cast<double>(idx[a]) / static_cast<double>(grid[a]);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < grid[a]) break;
      idx[a] = 0;
    }
  }
  return Tensor({n, d}, std::move(out));
}

// ---------------------------------------------------------------- NUDFT

Tensor nudft_forward(const Tensor& v, const Tensor& xi, const ModeSet& modes,
                     const std::optional<MonitorWeight>& weight) {
  const std::size_t d = modes.dim();
  if (v.rank() != 2) throw DimensionError("nudft_forward: values must be [N x c], got " + shape_string(v.shape()));
  require_points(xi, d, "nudft_forward");
  const std::size_t n = v.dim(0);
  const std::size_t c = v.dim(1);
  if (n == 0) throw DimensionError("nudft_forward: empty point set");
  if (xi.dim(0) != n) throw DimensionError("nudft_forward: value and coordinate counts differ");
  if (weight) weight->validate(n);

  const auto e = exponentials(xi.real().data(), n, modes, 0, modes.size());
  const RowMatC E = to_complex_matrix(e);
  RowMatC V(n, c);
  if (v.is_complex()) {
    V = CMapC(v.cplx().data(), n, c);
  } else {
    V.real() = CMap(v.real().data(), n, c);
    V.imag().setZero();
  }
  Eigen::VectorXd m = Eigen::VectorXd::Ones(n);
  if (weight) m = Eigen::Map<const Eigen::VectorXd>(weight->weights.real().data(), n);
  const double inv_n = 1.0 / static_cast<double>(n);
  const RowMatC Vm = m.asDiagonal() * V;
  RowMatC C = (E * Vm) * inv_n;

  std::vector<complex> out(C.data(), C.data() + C.size());
  Tensor result({modes.size(), c}, std::move(out));
  detail::check_finite(result, "nudft_forward");
  std::vector<Tensor> inputs{v, xi};
  if (weight) inputs.push_back(weight->weights);
  return detail::record(
      std::move(result), inputs,
      [v, xi, modes, m, n, c, inv_n, E, V, Vm](std::span<const double> g_raw, std::span<const std::span<double>> gin) {
        const CMapC G(as_complex(g_raw), static_cast<Eigen::Index>(modes.size()), static_cast<Eigen::Index>(c));
        if (!gin[0].empty()) {
          const RowMatC gv = (m.asDiagonal() * (E.adjoint() * G)) * inv_n;
          if (v.is_complex()) {
            complex* dst = as_complex(gin[0]);
            for (Eigen::Index i = 0; i < gv.size(); ++i) dst[i] += gv.data()[i];
          } else {
            for (Eigen::Index i = 0; i < gv.size(); ++i) gin[0][static_cast<std::size_t>(i)] += gv.data()[i].real();
          }
        }
        if (!gin[1].empty()) {
          const RowMatC S = G.conjugate() * Vm.transpose();
          const RowMat Y = E.cwiseProduct(S).imag();
          const RowMat K = frequency_matrix(modes, 0, modes.size());
          const RowMat gxi = (Y.transpose() * K) * (kTwoPi * inv_n);
          for (Eigen::Index i = 0; i < gxi.size(); ++i) gin[1][static_cast<std::size_t>(i)] += gxi.data()[i];
        }
        if (gin.size() > 2 && !gin[2].empty()) {
          const RowMatC S = G.conjugate() * V.transpose();
          const Eigen::VectorXd gm = E.cwiseProduct(S).real().colwise().sum().transpose() * inv_n;
          for (std::size_t i = 0; i < n; ++i) gin[2][i] += gm(static_cast<Eigen::Index>(i));
        }
      });
}

Tensor nudft_inverse(const Tensor& coeffs, const Tensor& xi_query, const ModeSet& modes) {
  const std::size_t d = modes.dim();
  if (!coeffs.is_complex() || coeffs.rank() != 2) {
    throw DimensionError("nudft_inverse: coefficients must be complex [|K| x c], got " +
                         shape_string(coeffs.shape()));
  }
  if (coeffs.dim(0) != modes.size()) {
    throw DimensionError("nudft_inverse: " + std::to_string(coeffs.dim(0)) + " coefficients for " +
                         std::to_string(modes.size()) + " modes");
  }
  require_points(xi_query, d, "nudft_inverse");
  const std::size_t c = coeffs.dim(1);
  const std::size_t m = xi_query.dim(0);
  const auto e = exponentials(xi_query.real().data(), m, modes, 0, modes.size());
  const RowMatC E = to_complex_matrix(e);
  const CMapC C(coeffs.cplx().data(), static_cast<Eigen::Index>(modes.size()), static_cast<Eigen::Index>(c));
  const RowMatC out = E.adjoint() * C;
  Tensor result({m, c}, std::vector<complex>(out.data(), out.data() + out.size()));
  detail::check_finite(result, "nudft_inverse");
  return detail::record(
      std::move(result), {coeffs, xi_query},
      [coeffs, modes, m, c, E](std::span<const double> g_raw, std::span<const std::span<double>> gin) {
        const CMapC G(as_complex(g_raw), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
        const CMapC C(coeffs.cplx().data(), static_cast<Eigen::Index>(modes.size()), static_cast<Eigen::Index>(c));
        if (!gin[0].empty()) {
          const RowMatC gc = E * G;
          complex* dst = as_complex(gin[0]);
          for (Eigen::Index i = 0; i < gc.size(); ++i) dst[i] += gc.data()[i];
        }
        if (!gin[1].empty()) {
          const RowMatC Qt = C * G.adjoint();
          const RowMat Y = E.conjugate().cwiseProduct(Qt).imag();
          const RowMat K = frequency_matrix(modes, 0, modes.size());
          const RowMat gxi = (Y.transpose() * K) * (-kTwoPi);
          for (Eigen::Index i = 0; i < gxi.size(); ++i) gin[1][static_cast<std::size_t>(i)] += gxi.data()[i];
        }
      });
}

double roundtrip_identity_check(const ModeSet& modes, const std::vector<std::size_t>& grid, std::uint64_t seed) {
  modes.check_nyquist(grid);
  NoGradGuard no_grad;
  Rng rng(seed);
  constexpr std::size_t kChannels = 2;
  std::vector<complex> coeffs(modes.size() * kChannels);
  for (auto& z : coeffs) z = complex(rng.normal(), rng.normal());
  const Tensor c({modes.size(), kChannels}, coeffs);
  const Tensor pts = uniform_grid_points(grid);
  const Tensor back = nudft_forward(nudft_inverse(c, pts, modes), pts, modes);
  double err = 0.0;
  auto b = back.cplx();
  for (std::size_t i = 0; i < coeffs.size(); ++i) err = std::max(err, std::abs(b[i] - coeffs[i]));
  return err;
}

double roundtrip_identity_check(const ModeSet& modes, std::size_t s, std::uint64_t seed) {
  return roundtrip_identity_check(modes, std::vector<std::size_t>(modes.dim(), s), seed);
}

Tensor spectral_conv_uniform(const Tensor& v, const Tensor& weights, const ModeSet& modes) {
  const std::size_t d = modes.dim();
  if (v.is_complex() || v.rank() != d + 1) {
    throw DimensionError("spectral_conv_uniform: expected real [s_1 .. s_" + std::to_string(d) + " x c], got " +
                         shape_string(v.shape()));
  }
  std::vector<std::size_t> grid(v.shape().begin(), v.shape().end() - 1);
  modes.check_nyquist(grid);
  Shape batched{1};
  batched.insert(batched.end(), v.shape().begin(), v.shape().end());
  const Tensor coeffs = spectral::grid_to_modes(ops::reshape(v, batched), modes);
  const Tensor mixed = spectral::mix_modes(coeffs, spectral::fold_weights(weights, modes));
  const Tensor out = spectral::modes_to_grid(mixed, modes, grid);
  Shape shape(out.shape().begin() + 1, out.shape().end());
  return ops::reshape(out, shape);
}

// ---------------------------------------------------------------- batched kernels

namespace spectral {

Tensor fold_weights(const Tensor& weights, const ModeSet& modes) {
  if (!weights.is_complex() || weights.rank() != 3 || weights.dim(0) != modes.size()) {
    throw DimensionError("fold_weights: expected complex [" + std::to_string(modes.size()) + " x ci x co], got " +
                         shape_string(weights.shape()));
  }
  const std::size_t block = weights.dim(1) * weights.dim(2);
  const std::size_t z = modes.zero_index();
  const std::size_t h_count = modes.half_size();
  auto r = weights.cplx();
  std::vector<complex> out(h_count * block);
  std::copy_n(r.data() + z * block, block, out.data());
  for (std::size_t h = 1; h < h_count; ++h) {
    const complex* pos = r.data() + (z + h) * block;
    const complex* neg = r.data() + (z - h) * block;
    complex* dst = out.data() + h * block;
    for (std::size_t j = 0; j < block; ++j) dst[j] = pos[j] + std::conj(neg[j]);
  }
  Tensor result({h_count, weights.dim(1), weights.dim(2)}, std::move(out));
  return detail::record(std::move(result), {weights},
                        [z, h_count, block](std::span<const double> g_raw, std::span<const std::span<double>> gin) {
                          const complex* g = as_complex(g_raw);
                          complex* gr = as_complex(gin[0]);
                          for (std::size_t j = 0; j < block; ++j) gr[z * block + j] += g[j];
                          for (std::size_t h = 1; h < h_count; ++h) {
                            for (std::size_t j = 0; j < block; ++j) {
                              gr[(z + h) * block + j] += g[h * block + j];
                              gr[(z - h) * block + j] += std::conj(g[h * block + j]);
                            }
                          }
                        });
}

Tensor encode_points(const Tensor& v, const Tensor& xi, const ModeSet& modes, const std::optional<Tensor>& weights) {
  const std::size_t d = modes.dim();
  if (v.is_complex() || v.rank() != 3) {
    throw DimensionError("encode_points: values must be real [B x N x c], got " + shape_string(v.shape()));
  }
  const std::size_t b_count = v.dim(0), n = v.dim(1), c = v.dim(2);
  if (xi.is_complex() || xi.shape() != Shape{b_count, n, d}) {
    throw DimensionError("encode_points: coordinates must be [B x N x d], got " + shape_string(xi.shape()));
  }
  if (n == 0) throw DimensionError("encode_points: empty point set");
  if (weights) {
    if (weights->is_complex() || weights->shape() != Shape{b_count, n}) {
      throw DimensionError("encode_points: weights must be [B x N]");
    }
    for (double w : weights->real()) {
      if (!(w > 0.0) || !std::isfinite(w)) throw WeightError("monitor weights must be positive and finite");
    }
  }
  const std::size_t first = modes.zero_index();
  const std::size_t hc = modes.half_size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::Index N = static_cast<Eigen::Index>(n), C = static_cast<Eigen::Index>(c);
  const Eigen::Index H = static_cast<Eigen::Index>(hc);

  auto weighted = [weights, n, c](const Tensor& v, std::size_t b) {
    RowMat vm = CMap(v.real().data() + b * n * c, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    if (weights) {
      const double* w = weights->real().data() + b * n;
      for (std::size_t i = 0; i < n; ++i) vm.row(static_cast<Eigen::Index>(i)) *= w[i];
    }
    return vm;
  };

  std::vector<double> out(b_count * hc * c * 2);
  parallel_for(b_count, [&](std::size_t b) {
    const auto e = exponentials(xi.real().data() + b * n * d, n, modes, first, hc);
    const RowMat vm = weighted(v, b);
    const RowMat cr = (e.re * vm) * inv_n;
    const RowMat ci = (e.im * vm) * inv_n;
    complex* dst = reinterpret_cast<complex*>(out.data()) + b * hc * c;
    for (Eigen::Index i = 0; i < H * C; ++i) dst[i] = complex(cr.data()[i], ci.data()[i]);
  });
  Tensor result = Tensor::from_raw({b_count, hc, c}, Dtype::kComplex128, std::move(out));
  detail::check_finite(result, "encode_points");
  return detail::record(
      std::move(result), {v, xi},
      [v, xi, modes, weights, weighted, b_count, n, c, d, first, hc, inv_n, N, C, H](
          std::span<const double> g_raw, std::span<const std::span<double>> gin) {
        const RowMat K = frequency_matrix(modes, first, hc);
        parallel_for(b_count, [&](std::size_t b) {
          const auto e = exponentials(xi.real().data() + b * n * d, n, modes, first, hc);
          RowMat gr(H, C), gi(H, C);
          const complex* g = as_complex(g_raw) + b * hc * c;
          for (Eigen::Index i = 0; i < H * C; ++i) {
            gr.data()[i] = g[i].real();
            gi.data()[i] = g[i].imag();
          }
          if (!gin[0].empty()) {
            RowMat gv = (e.re.transpose() * gr + e.im.transpose() * gi) * inv_n;
            if (weights) {
              const double* w = weights->real().data() + b * n;
              for (std::size_t i = 0; i < n; ++i) gv.row(static_cast<Eigen::Index>(i)) *= w[i];
            }
            Eigen::Map<RowMat>(gin[0].data() + b * n * c, N, C) += gv;
          }
          if (!gin[1].empty()) {
            const RowMat vm = weighted(v, b);
            const RowMat a = gr * vm.transpose();
            const RowMat bm = gi * vm.transpose();
            const RowMat x = e.im.cwiseProduct(a) - e.re.cwiseProduct(bm);
            Eigen::Map<RowMat>(gin[1].data() + b * n * d, N, static_cast<Eigen::Index>(d)) +=
                (x.transpose() * K) * (kTwoPi * inv_n);
          }
        });
      });
}

Tensor decode_points(const Tensor& coeffs, const Tensor& xi, const ModeSet& modes) {
  const std::size_t d = modes.dim();
  const std::size_t hc = modes.half_size();
  if (!coeffs.is_complex() || coeffs.rank() != 3 || coeffs.dim(1) != hc) {
    throw DimensionError("decode_points: coefficients must be complex [B x " + std::to_string(hc) + " x c], got " +
                         shape_string(coeffs.shape()));
  }
  const std::size_t b_count = coeffs.dim(0), c = coeffs.dim(2);
  if (xi.is_complex() || xi.rank() != 3 || xi.dim(0) != b_count || xi.dim(2) != d) {
    throw DimensionError("decode_points: query coordinates must be [B x M x d], got " + shape_string(xi.shape()));
  }
  const std::size_t m = xi.dim(1);
  const std::size_t first = modes.zero_index();
  const Eigen::Index M = static_cast<Eigen::Index>(m), C = static_cast<Eigen::Index>(c);
  const Eigen::Index H = static_cast<Eigen::Index>(hc);

  auto split = [hc, c, H, C](const complex* src, RowMat& re, RowMat& im) {
    re.resize(H, C);
    im.resize(H, C);
    for (std::size_t i = 0; i < hc * c; ++i) {
      re.data()[i] = src[i].real();
      im.data()[i] = src[i].imag();
    }
  };

  std::vector<double> out(b_count * m * c);
  parallel_for(b_count, [&](std::size_t b) {
    const auto e = exponentials(xi.real().data() + b * m * d, m, modes, first, hc);
    RowMat cr, ci;
    split(coeffs.cplx().data() + b * hc * c, cr, ci);
    Eigen::Map<RowMat>(out.data() + b * m * c, M, C) = e.re.transpose() * cr + e.im.transpose() * ci;
  });
  Tensor result({b_count, m, c}, std::move(out));
  detail::check_finite(result, "decode_points");
  return detail::record(
      std::move(result), {coeffs, xi},
      [coeffs, xi, modes, split, b_count, m, c, d, first, hc, M, C](std::span<const double> g_raw,
                                                                     std::span<const std::span<double>> gin) {
        const RowMat K = frequency_matrix(modes, first, hc);
        parallel_for(b_count, [&](std::size_t b) {
          const auto e = exponentials(xi.real().data() + b * m * d, m, modes, first, hc);
          const CMap g(g_raw.data() + b * m * c, M, C);
          if (!gin[0].empty()) {
            const RowMat gcr = e.re * g;
            const RowMat gci = e.im * g;
            complex* dst = as_complex(gin[0]) + b * hc * c;
            for (std::size_t i = 0; i < hc * c; ++i) dst[i] += complex(gcr.data()[i], gci.data()[i]);
          }
          if (!gin[1].empty()) {
            RowMat cr, ci;
            split(coeffs.cplx().data() + b * hc * c, cr, ci);
            const RowMat tr = cr * g.transpose();
            const RowMat ti = ci * g.transpose();
            const RowMat x = e.im.cwiseProduct(tr) - e.re.cwiseProduct(ti);
            Eigen::Map<RowMat>(gin[1].data() + b * m * d, M, static_cast<Eigen::Index>(d)) += (x.transpose() * K) * kTwoPi;
          }
        });
      });
}

Tensor mix_modes(const Tensor& coeffs, const Tensor& weights) {
  if (!coeffs.is_complex() || !weights.is_complex() || coeffs.rank() != 3 || weights.rank() != 3 ||
      coeffs.dim(1) != weights.dim(0) || coeffs.dim(2) != weights.dim(1)) {
    throw DimensionError("mix_modes: coefficients " + shape_string(coeffs.shape()) + " and weights " +
                         shape_string(weights.shape()) + " are incompatible");
  }
  const std::size_t bc = coeffs.dim(0), hc = coeffs.dim(1), ci = coeffs.dim(2), co = weights.dim(2);
  const Eigen::Index B = static_cast<Eigen::Index>(bc), Ci = static_cast<Eigen::Index>(ci),
                     Co = static_cast<Eigen::Index>(co);
  std::vector<complex> out(bc * hc * co);
  const complex* x = coeffs.cplx().data();
  const complex* w = weights.cplx().data();
  for (std::size_t h = 0; h < hc; ++h) {
    Eigen::Map<const RowMatC, 0, Stride> xin(x + h * ci, B, Ci, Stride(static_cast<Eigen::Index>(hc * ci)));
    Eigen::Map<RowMatC, 0, Stride> y(out.data() + h * co, B, Co, Stride(static_cast<Eigen::Index>(hc * co)));
    y.noalias() = xin * CMapC(w + h * ci * co, Ci, Co);
  }
  Tensor result({bc, hc, co}, std::move(out));
  detail::check_finite(result, "mix_modes");
  return detail::record(
      std::move(result), {coeffs, weights},
      [coeffs, weights, hc, ci, co, B, Ci, Co](std::span<const double> g_raw, std::span<const std::span<double>> gin) {
        const complex* g = as_complex(g_raw);
        const complex* x = coeffs.cplx().data();
        const complex* w = weights.cplx().data();
        for (std::size_t h = 0; h < hc; ++h) {
          Eigen::Map<const RowMatC, 0, Stride> gh(g + h * co, B, Co, Stride(static_cast<Eigen::Index>(hc * co)));
          const CMapC wh(w + h * ci * co, Ci, Co);
          if (!gin[0].empty()) {
            Eigen::Map<RowMatC, 0, Stride> gx(as_complex(gin[0]) + h * ci, B, Ci,
                                              Stride(static_cast<Eigen::Index>(hc * ci)));
            gx.noalias() += gh * wh.adjoint();
          }
          if (!gin[1].empty()) {
            Eigen::Map<const RowMatC, 0, Stride> xh(x + h * ci, B, Ci, Stride(static_cast<Eigen::Index>(hc * ci)));
            MapC(as_complex(gin[1]) + h * ci * co, Ci, Co).noalias() += xh.adjoint() * gh;
          }
        }
      });
}

Tensor grid_to_modes(const Tensor& v, const ModeSet& modes) {
  const std::size_t d = modes.dim();
  if (v.is_complex() || v.rank() != d + 2) {
    throw DimensionError("grid_to_modes: expected real [B x grid x c], got " + shape_string(v.shape()));
  }
  const std::vector<std::size_t> grid(v.shape().begin() + 1, v.shape().end() - 1);
  modes.check_nyquist(grid);
  const std::size_t bc = v.dim(0), c = v.shape().back();
  const std::size_t cells = shape_numel(grid);
  const std::size_t hc = modes.half_size();
  const auto pos = half_positions(modes, grid, c);
  const auto axes = spatial_axes(d);
  const double inv = 1.0 / static_cast<double>(cells);

  std::vector<complex> spec(v.numel());
  auto src = v.real();
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = complex(src[i], 0.0);
  fft::transform_axes(spec, v.shape(), axes, false);
  std::vector<complex> out(bc * hc * c);
  for (std::size_t b = 0; b < bc; ++b) {
    for (std::size_t h = 0; h < hc; ++h) {
      const complex* s = spec.data() + b * cells * c + pos[h];
      complex* dst = out.data() + (b * hc + h) * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] = s[j] * inv;
    }
  }
  Tensor result({bc, hc, c}, std::move(out));
  detail::check_finite(result, "grid_to_modes");
  return detail::record(std::move(result), {v},
                        [shape = v.shape(), pos, axes, bc, hc, c, cells, inv](std::span<const double> g_raw,
                                                                               std::span<const std::span<double>> gin) {
                          const complex* g = as_complex(g_raw);
                          std::vector<complex> z(bc * cells * c);
                          for (std::size_t b = 0; b < bc; ++b) {
                            for (std::size_t h = 0; h < hc; ++h) {
                              std::copy_n(g + (b * hc + h) * c, c, z.data() + b * cells * c + pos[h]);
                            }
                          }
                          fft::transform_axes(z, shape, axes, true);
                          for (std::size_t i = 0; i < z.size(); ++i) gin[0][i] += z[i].real() * inv;
                        });
}

Tensor modes_to_grid(const Tensor& coeffs, const ModeSet& modes, const std::vector<std::size_t>& grid) {
  const std::size_t d = modes.dim();
  const std::size_t hc = modes.half_size();
  if (!coeffs.is_complex() || coeffs.rank() != 3 || coeffs.dim(1) != hc) {
    throw DimensionError("modes_to_grid: expected complex [B x " + std::to_string(hc) + " x c], got " +
                         shape_string(coeffs.shape()));
  }
  modes.check_nyquist(grid);
  const std::size_t bc = coeffs.dim(0), c = coeffs.dim(2);
  const std::size_t cells = shape_numel(grid);
  const auto pos = half_positions(modes, grid, c);
  const auto axes = spatial_axes(d);
  Shape shape{bc};
  shape.insert(shape.end(), grid.begin(), grid.end());
  shape.push_back(c);

  std::vector<complex> z(bc * cells * c);
  const complex* src = coeffs.cplx().data();
  for (std::size_t b = 0; b < bc; ++b) {
    for (std::size_t h = 0; h < hc; ++h) {
      std::copy_n(src + (b * hc + h) * c, c, z.data() + b * cells * c + pos[h]);
    }
  }
  fft::transform_axes(z, shape, axes, true);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i].real();
  Tensor result(shape, std::move(out));
  detail::check_finite(result, "modes_to_grid");
  return detail::record(std::move(result), {coeffs},
                        [shape, pos, axes, bc, hc, c, cells](std::span<const double> g_raw,
                                                             std::span<const std::span<double>> gin) {
                          std::vector<complex> z(g_raw.size());
                          for (std::size_t i = 0; i < z.size(); ++i) z[i] = complex(g_raw[i], 0.0);
                          fft::transform_axes(z, shape, axes, false);
                          complex* dst = as_complex(gin[0]);
                          for (std::size_t b = 0; b < bc; ++b) {
                            for (std::size_t h = 0; h < hc; ++h) {
                              const complex* s = z.data() + b * cells * c + pos[h];
                              complex* o = dst + (b * hc + h) * c;
                              for (std::size_t j = 0; j < c; ++j) o[j] += s[j];
                            }
                          }
                        });
}

}  // namespace spectral

}  // namespace geofno
