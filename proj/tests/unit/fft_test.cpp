// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>

#include "geofno/fft.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::naive_dft_axis;
using testing::random_complex;

class FftLength : public ::testing::TestWithParam<std::size_t> {};

TEST_P(FftLength, ForwardMatchesNaiveDft) {
  const std::size_t n = GetParam();
  Rng rng(n);
  const Tensor v = random_complex({n}, rng);
  std::vector<complex> data(v.cplx().begin(), v.cplx().end());
  const auto expected = naive_dft_axis(data, {n}, 0, false);
  fft::transform(data, false);
  for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(data[k] - expected[k]), 1e-11 * n) << "n=" << n << " k=" << k;
}

TEST_P(FftLength, InverseMatchesNaiveDft) {
  const std::size_t n = GetParam();
  Rng rng(n + 1000);
  const Tensor v = random_complex({n}, rng);
  std::vector<complex> data(v.cplx().begin(), v.cplx().end());
  const auto expected = naive_dft_axis(data, {n}, 0, true);
  fft::transform(data, true);
  for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(data[k] - expected[k]), 1e-11 * n);
}

// Radix 2/3/4/5, generic odd primes, and primes above the Bluestein threshold.
INSTANTIATE_TEST_SUITE_P(Lengths, FftLength,
                         ::testing::Values(1, 2, 3, 4, 5, 6, 7, 8, 9, 12, 16, 25, 30, 32, 49, 60, 64, 67, 97, 121, 128,
                                           131, 210, 256, 257));

TEST(FftNd, ForwardIsScaledInverseIsNot) {
  Rng rng(5);
  const Shape shape{4, 6, 3};
  const Tensor v = random_complex(shape, rng);
  const Tensor f = ops::fft_nd(v, {0, 1, 2}, false);
  std::vector<complex> ref(v.cplx().begin(), v.cplx().end());
  for (std::size_t a = 0; a < 3; ++a) ref = naive_dft_axis(ref, shape, a, false);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(f.cplx()[i] - ref[i] / 72.0), 1e-13);
  const Tensor back = ops::fft_nd(f, {0, 1, 2}, true);
  EXPECT_LT(testing::max_abs_diff(back, v), 1e-13);
}

TEST(FftNd, SubsetOfAxes) {
  Rng rng(6);
  const Shape shape{3, 5, 2};
  const Tensor v = random_complex(shape, rng);
  const Tensor f = ops::fft_nd(v, {1}, false);
  std::vector<complex> ref(v.cplx().begin(), v.cplx().end());
  ref = naive_dft_axis(ref, shape, 1, false);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(f.cplx()[i] - ref[i] / 5.0), 1e-13);
}

TEST(FftProperties, ShiftTheorem) {
  Rng rng(8);
  const std::size_t n = 24, shift = 5;
  const Tensor v = random_complex({n}, rng);
  std::vector<complex> a(v.cplx().begin(), v.cplx().end()), b(n);
  for (std::size_t j = 0; j < n; ++j) b[(j + shift) % n] = a[j];
  fft::transform(a, false);
  fft::transform(b, false);
  for (std::size_t k = 0; k < n; ++k) {
    const complex phase = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * shift) / n);
    EXPECT_LT(std::abs(b[k] - a[k] * phase), 1e-12);
  }
}

TEST(FftProperties, RealInputHasHermitianSpectrum) {
  Rng rng(9);
  for (std::size_t n : {10, 15, 97}) {
    std::vector<complex> a(n);
    for (auto& z : a) z = rng.uniform(-1.0, 1.0);
    fft::transform(a, false);
    for (std::size_t k = 1; k < n; ++k) EXPECT_LT(std::abs(a[k] - std::conj(a[n - k])), 1e-12);
  }
}

TEST(FftProperties, Parseval) {
  Rng rng(10);
  for (std::size_t n : {8, 27, 131}) {
    const Tensor v = random_complex({n}, rng);
    std::vector<complex> a(v.cplx().begin(), v.cplx().end());
    double time_energy = 0.0, freq_energy = 0.0;
    for (const auto& z : a) time_energy += std::norm(z);
    fft::transform(a, false);
    for (const auto& z : a) freq_energy += std::norm(z);
    EXPECT_NEAR(freq_energy / n, time_energy, 1e-10 * time_energy);
  }
}

}  // namespace
}  // namespace geofno
