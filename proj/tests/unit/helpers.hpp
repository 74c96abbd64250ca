// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "geofno/ops.hpp"
#include "geofno/rng.hpp"
#include "geofno/tape.hpp"
#include "geofno/tensor.hpp"

namespace geofno::testing {

inline Tensor random_real(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(shape, std::move(v));
}

inline Tensor random_complex(const Shape& shape, Rng& rng) {
  std::vector<complex> v(shape_numel(shape));
  for (auto& z : v) z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return Tensor(shape, std::move(v));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) { return max_abs_diff(a.raw(), b.raw()); }

/// Reverse-mode gradient of a scalar function of one tensor.
inline std::vector<double> tape_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  Tape tape;
  const Tensor leaf = x.with_grad();
  tape.backward(f(leaf));
  const Tensor g = tape.grad_or_zeros(leaf);
  return {g.raw().begin(), g.raw().end()};
}

/// Central differences over the raw storage of x (complex entries are
/// perturbed in their real and imaginary parts separately).
inline std::vector<double> fd_grad(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                                   double h = 1e-6) {
  NoGradGuard guard;
  const std::vector<double> base(x.raw().begin(), x.raw().end());
  std::vector<double> g(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto plus = base, minus = base;
    plus[i] += h;
    minus[i] -= h;
    const double fp = f(Tensor::from_raw(x.shape(), x.dtype(), plus)).item();
    const double fm = f(Tensor::from_raw(x.shape(), x.dtype(), minus)).item();
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Naive DFT along one axis of a flat row-major complex array.
inline std::vector<complex> naive_dft_axis(const std::vector<complex>& in, const Shape& shape, std::size_t axis,
                                           bool inverse) {
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t n = shape[axis];
  const std::size_t outer = in.size() / (n * inner);
  std::vector<complex> out(in.size());
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        complex acc{};
        for (std::size_t j = 0; j < n; ++j) {
          const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j * k % n) / static_cast<double>(n);
          acc += in[(o * n + j) * inner + i] * std::polar(1.0, angle);
        }
        out[(o * n + k) * inner + i] = acc;
      }
    }
  }
  return out;
}

}  // namespace geofno::testing
