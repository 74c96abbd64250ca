// SPDX-License-Identifier: Apache-2.0
#include "geofno/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "geofno/error.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace fft {

namespace {

constexpr std::size_t kBluesteinThreshold = 64;

struct Plan {
  std::size_t n = 0;
  std::vector<std::size_t> factors;
  std::vector<complex> twiddle;          // e^{-2 pi i j / n}
  std::vector<complex> twiddle_inverse;  // conjugates
  std::size_t largest = 1;

  // Bluestein state, used when n has a prime factor above the threshold.
  bool bluestein = false;
  std::size_t m = 0;
  std::vector<complex> chirp;         // e^{-i pi j^2 / n}
  std::vector<complex> kernel_fft;    // FFT_m of the conjugate chirp, wrapped
  std::shared_ptr<const Plan> inner;  // power-of-two plan of length m
};

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> f;
  for (std::size_t p : {4, 2, 3, 5}) {
    while (n % p == 0 && (p != 4 || n != 2)) {
      f.push_back(p);
      n /= p;
    }
  }
  for (std::size_t p = 7; p * p <= n; p += 2) {
    while (n % p == 0) {
      f.push_back(p);
      n /= p;
    }
  }
  if (n > 1) f.push_back(n);
  return f;
}

std::shared_ptr<const Plan> get_plan(std::size_t n);

std::shared_ptr<const Plan> build_plan(std::size_t n) {
  auto plan = std::make_shared<Plan>();
  plan->n = n;
  plan->factors = factorize(n);
  plan->twiddle.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    plan->twiddle[j] = {std::cos(angle), std::sin(angle)};
  }
  plan->twiddle_inverse.resize(n);
  for (std::size_t j = 0; j < n; ++j) plan->twiddle_inverse[j] = std::conj(plan->twiddle[j]);
  for (auto p : plan->factors) plan->largest = std::max(plan->largest, p);
  if (plan->largest > kBluesteinThreshold) {
    plan->bluestein = true;
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    plan->m = m;
    plan->chirp.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      // j^2 mod 2n keeps the phase argument small.
      const std::size_t q = (j * j) % (2 * n);
      const double angle = -std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
      plan->chirp[j] = {std::cos(angle), std::sin(angle)};
    }
    plan->inner = get_plan(m);
    std::vector<complex> kernel(m, complex{});
    kernel[0] = std::conj(plan->chirp[0]);
    for (std::size_t j = 1; j < n; ++j) {
      kernel[j] = std::conj(plan->chirp[j]);
      kernel[m - j] = std::conj(plan->chirp[j]);
    }
    transform(kernel, false);
    plan->kernel_fft = std::move(kernel);
  }
  return plan;
}

std::shared_ptr<const Plan> get_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const Plan>> cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }
  auto plan = build_plan(n);
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(n, std::move(plan)).first->second;
}

inline complex mul(complex a, complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// Multiplies by -i (forward) or +i (inverse).
inline complex rot(complex a, bool inverse) { return inverse ? complex{-a.imag(), a.real()} : complex{a.imag(), -a.real()}; }

inline void radix4(complex& x0, complex& x1, complex& x2, complex& x3, bool inverse) {
  const complex s02 = x0 + x2, d02 = x0 - x2;
  const complex s13 = x1 + x3, d13 = rot(x1 - x3, inverse);
  x0 = s02 + s13;
  x1 = d02 + d13;
  x2 = s02 - s13;
  x3 = d02 - d13;
}

// Decimation in time: split the input into p interleaved subsequences of
// length n/p, transform them recursively, then combine with radix-p
// butterflies. `tw_stride` maps length-n twiddles onto the plan's table `w`.
void recurse(const Plan& plan, const complex* w, const complex* in, std::size_t in_stride, complex* out, std::size_t n,
             std::size_t level, std::size_t tw_stride, bool inverse, complex* tmp) {
  const std::size_t p = plan.factors[level];
  const std::size_t m = n / p;
  if (m == 1) {
    if (p == 2) {
      out[0] = in[0] + in[in_stride];
      out[1] = in[0] - in[in_stride];
    } else if (p == 4) {
      out[0] = in[0];
      out[1] = in[in_stride];
      out[2] = in[2 * in_stride];
      out[3] = in[3 * in_stride];
      radix4(out[0], out[1], out[2], out[3], inverse);
    } else {
      for (std::size_t k = 0; k < p; ++k) {
        complex acc{};
        for (std::size_t j = 0; j < p; ++j) acc += mul(in[j * in_stride], w[((j * k) % p) * tw_stride]);
        out[k] = acc;
      }
    }
    return;
  }
  for (std::size_t r = 0; r < p; ++r) {
    recurse(plan, w, in + r * in_stride, in_stride * p, out + r * m, m, level + 1, tw_stride * p, inverse, tmp);
  }
  if (p == 2) {
    for (std::size_t q = 0; q < m; ++q) {
      const complex a = out[q];
      const complex b = mul(out[m + q], w[q * tw_stride]);
      out[q] = a + b;
      out[m + q] = a - b;
    }
    return;
  }
  if (p == 4) {
    for (std::size_t q = 0; q < m; ++q) {
      complex x0 = out[q];
      complex x1 = mul(out[m + q], w[q * tw_stride]);
      complex x2 = mul(out[2 * m + q], w[2 * q * tw_stride]);
      complex x3 = mul(out[3 * m + q], w[3 * q * tw_stride]);
      radix4(x0, x1, x2, x3, inverse);
      out[q] = x0;
      out[m + q] = x1;
      out[2 * m + q] = x2;
      out[3 * m + q] = x3;
    }
    return;
  }
  for (std::size_t q = 0; q < m; ++q) {
    for (std::size_t r = 0; r < p; ++r) tmp[r] = mul(out[r * m + q], w[r * q * tw_stride]);
    for (std::size_t s = 0; s < p; ++s) {
      complex acc{};
      for (std::size_t r = 0; r < p; ++r) acc += mul(tmp[r], w[((r * s) % p) * m * tw_stride]);
      out[s * m + q] = acc;
    }
  }
}

void run_bluestein(const Plan& plan, std::span<complex> data, bool inverse) {
  const std::size_t n = plan.n;
  const std::size_t m = plan.m;
  // The inverse DFT is the conjugate of the forward DFT of the conjugate.
  std::vector<complex> a(m, complex{});
  for (std::size_t j = 0; j < n; ++j) {
    const complex x = inverse ? std::conj(data[j]) : data[j];
    a[j] = x * plan.chirp[j];
  }
  transform(a, false);
  for (std::size_t j = 0; j < m; ++j) a[j] *= plan.kernel_fft[j];
  transform(a, true);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) {
    const complex y = a[k] * inv_m * plan.chirp[k];
    data[k] = inverse ? std::conj(y) : y;
  }
}

}  // namespace

void transform(std::span<complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  auto plan = get_plan(n);
  if (plan->bluestein) {
    run_bluestein(*plan, data, inverse);
    return;
  }
  thread_local std::vector<complex> input;
  thread_local std::vector<complex> scratch;
  input.assign(data.begin(), data.end());
  scratch.resize(plan->largest);
  const complex* w = inverse ? plan->twiddle_inverse.data() : plan->twiddle.data();
  recurse(*plan, w, input.data(), 1, data.data(), n, 0, 1, inverse, scratch.data());
}

void transform_axes(std::span<complex> data, const Shape& shape, std::span<const std::size_t> axes, bool inverse) {
  std::vector<complex> line;
  for (std::size_t axis : axes) {
    if (axis >= shape.size()) {
      throw DimensionError("fft axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape));
    }
    const std::size_t len = shape[axis];
    if (len <= 1) continue;
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    const std::size_t outer = shape_numel(shape) / (len * inner);
    line.resize(len);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        complex* base = data.data() + o * len * inner + i;
        for (std::size_t j = 0; j < len; ++j) line[j] = base[j * inner];
        transform(line, inverse);
        for (std::size_t j = 0; j < len; ++j) base[j * inner] = line[j];
      }
    }
  }
}

}  // namespace fft

namespace ops {

namespace {

std::vector<complex> transformed(std::span<const complex> src, const Shape& shape,
                                 const std::vector<std::size_t>& axes, bool inverse, double factor) {
  std::vector<complex> out(src.begin(), src.end());
  fft::transform_axes(out, shape, axes, inverse);
  if (factor != 1.0) {
    for (auto& v : out) v *= factor;
  }
  return out;
}

}  // namespace

Tensor fft_nd(const Tensor& v, const std::vector<std::size_t>& axes, bool inverse) {
  if (!v.is_complex()) throw DtypeError("fft_nd expects a complex128 tensor");
  std::size_t count = 1;
  for (std::size_t axis : axes) count *= v.dim(axis);
  const double norm = 1.0 / static_cast<double>(count);
  const Shape shape = v.shape();
  Tensor out(shape, transformed(v.cplx(), shape, axes, inverse, inverse ? 1.0 : norm));
  detail::check_finite(out, "fft_nd");
  // Forward: y = W x / N, adjoint W^H g / N. Inverse: y = W^H x, adjoint W g.
  return detail::record(std::move(out), {v},
                        [shape, axes, inverse, norm](std::span<const double> g, std::span<const std::span<double>> gin) {
                          std::span<const complex> gc(reinterpret_cast<const complex*>(g.data()), g.size() / 2);
                          auto back = transformed(gc, shape, axes, !inverse, inverse ? 1.0 : norm);
                          double* dst = gin[0].data();
                          const double* src = reinterpret_cast<const double*>(back.data());
                          for (std::size_t i = 0; i < gin[0].size(); ++i) dst[i] += src[i];
                        });
}

}  // namespace ops

}  // namespace geofno
