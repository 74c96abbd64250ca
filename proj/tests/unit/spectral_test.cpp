// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>

#include "geofno/error.hpp"
#include "geofno/spectral.hpp"
#include "helpers.hpp"

namespace geofno {
namespace {

using testing::fd_grad;
using testing::max_abs_diff;
using testing::random_complex;
using testing::random_real;
using testing::tape_grad;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dot(std::span<const int> k, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t a = 0; a < k.size(); ++a) s += k[a] * x[a];
  return s;
}

// coeffs(k) = 1/N sum_i w_i v_i exp(-2 pi i k.x_i)
std::vector<complex> naive_forward(const Tensor& v, const Tensor& xi, const ModeSet& modes,
                                   const std::vector<double>* w = nullptr) {
  const std::size_t n = xi.dim(0), d = xi.dim(1), c = v.dim(1);
  std::vector<complex> out(modes.size() * c);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const complex e = std::polar(1.0, -kTwoPi * dot(modes.mode(k), xi.real().subspan(i * d, d)));
      for (std::size_t ch = 0; ch < c; ++ch) {
        const complex val = v.is_complex() ? v.cplx()[i * c + ch] : complex(v.real()[i * c + ch]);
        out[k * c + ch] += (w ? (*w)[i] : 1.0) * val * e / static_cast<double>(n);
      }
    }
  }
  return out;
}

TEST(ModeSet, LexicographicEnumerationAndNegation) {
  const ModeSet m({2, 1});
  ASSERT_EQ(m.size(), 15u);
  EXPECT_EQ(m.mode(0)[0], -2);
  EXPECT_EQ(m.mode(0)[1], -1);
  EXPECT_EQ(m.mode(1)[1], 0);
  EXPECT_EQ(m.mode(m.zero_index())[0], 0);
  EXPECT_EQ(m.mode(m.zero_index())[1], 0);
  EXPECT_EQ(m.half_size(), 8u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto k = m.mode(i);
    const auto nk = m.mode(m.negated(i));
    EXPECT_EQ(k[0], -nk[0]);
    EXPECT_EQ(k[1], -nk[1]);
    EXPECT_EQ(m.index_of(k), i);
  }
  EXPECT_EQ(ModeSet::cube(3, 1).size(), 27u);
}

TEST(ModeSet, NyquistValidation) {
  const ModeSet m({4, 4});
  EXPECT_NO_THROW(m.check_nyquist({9, 12}));
  EXPECT_THROW(m.check_nyquist({8, 12}), SamplingError);
  EXPECT_THROW(m.check_nyquist({9}), DimensionError);
  EXPECT_THROW(ModeSet({-1}), DimensionError);
}

TEST(Nudft, ForwardMatchesDirectSum) {
  Rng rng(1);
  const ModeSet modes({3, 2});
  const Tensor xi = random_real({17, 2}, rng, 0.0, 1.0);
  const Tensor v = random_real({17, 3}, rng);
  const Tensor got = nudft_forward(v, xi, modes);
  const auto want = naive_forward(v, xi, modes);
  ASSERT_EQ(got.shape(), (Shape{modes.size(), 3}));
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_LT(std::abs(got.cplx()[i] - want[i]), 1e-13);
}

TEST(Nudft, MonitorWeightsScaleSamples) {
  Rng rng(2);
  const ModeSet modes({2});
  const Tensor xi = random_real({9, 1}, rng, 0.0, 1.0);
  const Tensor v = random_complex({9, 2}, rng);
  std::vector<double> w(9);
  for (auto& x : w) x = rng.uniform(0.5, 2.0);
  const Tensor got = nudft_forward(v, xi, modes, MonitorWeight{Tensor({9}, std::vector<double>(w))});
  const auto want = naive_forward(v, xi, modes, &w);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_LT(std::abs(got.cplx()[i] - want[i]), 1e-13);
  EXPECT_THROW(nudft_forward(v, xi, modes, MonitorWeight{Tensor::full({9}, -1.0)}), WeightError);
}

TEST(Nudft, InverseMatchesDirectSum) {
  Rng rng(3);
  const ModeSet modes({2, 2});
  const Tensor coeffs = random_complex({modes.size(), 2}, rng);
  const Tensor xq = random_real({11, 2}, rng, -0.5, 1.5);
  const Tensor got = nudft_inverse(coeffs, xq, modes);
  for (std::size_t j = 0; j < 11; ++j) {
    for (std::size_t c = 0; c < 2; ++c) {
      complex acc{};
      for (std::size_t k = 0; k < modes.size(); ++k) {
        acc += coeffs.cplx()[k * 2 + c] * std::polar(1.0, kTwoPi * dot(modes.mode(k), xq.real().subspan(j * 2, 2)));
      }
      EXPECT_LT(std::abs(got.cplx()[j * 2 + c] - acc), 1e-12);
    }
  }
}

TEST(Nudft, PeriodicInPointCoordinates) {
  Rng rng(4);
  const ModeSet modes({3});
  const Tensor xi = random_real({8, 1}, rng, 0.0, 1.0);
  const Tensor v = random_real({8, 1}, rng);
  const Tensor shifted = ops::add_scalar(xi, 1.0);
  EXPECT_LT(max_abs_diff(nudft_forward(v, xi, modes), nudft_forward(v, shifted, modes)), 1e-12);
}

class Roundtrip : public ::testing::TestWithParam<std::tuple<std::vector<int>, std::vector<std::size_t>>> {};

TEST_P(Roundtrip, UniformGridIsExact) {
  const auto& [k, grid] = GetParam();
  EXPECT_LT(roundtrip_identity_check(ModeSet(k), grid, 17), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Configs, Roundtrip,
                         ::testing::Values(std::make_tuple(std::vector<int>{0}, std::vector<std::size_t>{1}),
                                           std::make_tuple(std::vector<int>{5}, std::vector<std::size_t>{11}),
                                           std::make_tuple(std::vector<int>{8}, std::vector<std::size_t>{40}),
                                           std::make_tuple(std::vector<int>{3, 4}, std::vector<std::size_t>{7, 9}),
                                           std::make_tuple(std::vector<int>{8, 8}, std::vector<std::size_t>{17, 20})));

TEST(Nudft, RoundtripBelowNyquistFails) {
  EXPECT_THROW(roundtrip_identity_check(ModeSet({4}), std::vector<std::size_t>{8}), SamplingError);
}

TEST(Nudft, GradientsInValuesAndPoints) {
  Rng rng(5);
  const ModeSet modes({2, 1});
  const Tensor xi = random_real({6, 2}, rng, 0.0, 1.0);
  const Tensor v = random_real({6, 2}, rng);
  const Tensor probe = random_complex({modes.size(), 2}, rng);
  const auto loss_v = [&](const Tensor& x) {
    const Tensor c = ops::mul(nudft_forward(x, xi, modes), probe);
    return ops::sum(ops::add(ops::real_part(c), ops::square(ops::imag_part(c))));
  };
  const auto loss_xi = [&](const Tensor& p) {
    const Tensor c = nudft_forward(v, p, modes);
    const Tensor back = nudft_inverse(ops::mul(c, probe), p, modes);
    return ops::sum(ops::square(ops::real_part(back)));
  };
  for (const auto& [f, x] : {std::pair{std::function<Tensor(const Tensor&)>(loss_v), v},
                             std::pair{std::function<Tensor(const Tensor&)>(loss_xi), xi}}) {
    const auto a = tape_grad(f, x);
    const auto n = fd_grad(f, x);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], n[i], 1e-7 * (1.0 + std::abs(n[i])));
  }
}

TEST(Spectral, FoldWeightsDefinition) {
  Rng rng(6);
  const ModeSet modes({2, 1});
  const Tensor r = random_complex({modes.size(), 2, 3}, rng);
  const Tensor h = spectral::fold_weights(r, modes);
  ASSERT_EQ(h.shape(), (Shape{modes.half_size(), 2, 3}));
  for (std::size_t q = 0; q < modes.half_size(); ++q) {
    const std::size_t k = modes.zero_index() + q;
    for (std::size_t e = 0; e < 6; ++e) {
      const complex want = q == 0 ? r.cplx()[k * 6 + e] : r.cplx()[k * 6 + e] + std::conj(r.cplx()[modes.negated(k) * 6 + e]);
      EXPECT_LT(std::abs(h.cplx()[q * 6 + e] - want), 1e-15);
    }
  }
}

// Full-spectrum oracle: DFT, per-mode mixing over the whole cube, synthesis,
// real part.
TEST(Spectral, ConvUniformMatchesFullSpectrumOracle) {
  Rng rng(7);
  const std::vector<std::size_t> grid{9, 8};
  const ModeSet modes({3, 2});
  const Tensor v = random_real({9, 8, 2}, rng);
  const Tensor r = random_complex({modes.size(), 2, 3}, rng);
  const Tensor got = spectral_conv_uniform(v, r, modes);
  const Tensor xi = uniform_grid_points(grid);
  const auto coeffs = naive_forward(ops::reshape(v, {72, 2}), xi, modes);
  std::vector<complex> mixed(modes.size() * 3);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t o = 0; o < 3; ++o) mixed[k * 3 + o] += coeffs[k * 2 + i] * r.cplx()[(k * 2 + i) * 3 + o];
    }
  }
  for (std::size_t p = 0; p < 72; ++p) {
    for (std::size_t o = 0; o < 3; ++o) {
      complex acc{};
      for (std::size_t k = 0; k < modes.size(); ++k) {
        acc += mixed[k * 3 + o] * std::polar(1.0, kTwoPi * dot(modes.mode(k), xi.real().subspan(p * 2, 2)));
      }
      EXPECT_NEAR(got.real()[p * 3 + o], acc.real(), 1e-12);
    }
  }
}

TEST(Spectral, EncodeDecodeAgreeWithNudftOnHalfSet) {
  Rng rng(8);
  const ModeSet modes({2, 2});
  const Tensor xi = random_real({2, 10, 2}, rng, 0.0, 1.0);
  const Tensor v = random_real({2, 10, 3}, rng);
  const Tensor enc = spectral::encode_points(v, xi, modes);
  ASSERT_EQ(enc.shape(), (Shape{2, modes.half_size(), 3}));
  for (std::size_t b = 0; b < 2; ++b) {
    const Tensor full = nudft_forward(ops::select(v, b), ops::select(xi, b), modes);
    for (std::size_t q = 0; q < modes.half_size(); ++q) {
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_LT(std::abs(enc.cplx()[(b * modes.half_size() + q) * 3 + c] -
                           full.cplx()[(modes.zero_index() + q) * 3 + c]),
                  1e-13);
      }
    }
  }
  // Decoding the half set of a real field's spectrum reproduces the real part
  // of the full synthesis.
  const Tensor coeffs = random_complex({1, modes.half_size(), 1}, rng);
  const Tensor xq = random_real({1, 5, 2}, rng, 0.0, 1.0);
  const Tensor dec = spectral::decode_points(coeffs, xq, modes);
  for (std::size_t j = 0; j < 5; ++j) {
    double acc = 0.0;
    for (std::size_t q = 0; q < modes.half_size(); ++q) {
      acc += (coeffs.cplx()[q] * std::polar(1.0, kTwoPi * dot(modes.mode(modes.zero_index() + q),
                                                               xq.real().subspan(j * 2, 2))))
                 .real();
    }
    EXPECT_NEAR(dec.real()[j], acc, 1e-13);
  }
}

TEST(Spectral, GridToModesEqualsEncodeOnUniformGrid) {
  Rng rng(9);
  const std::vector<std::size_t> grid{7, 6};
  const ModeSet modes({3, 2});
  const Tensor v = random_real({1, 7, 6, 2}, rng);
  const Tensor pts = ops::reshape(uniform_grid_points(grid), {1, 42, 2});
  EXPECT_LT(max_abs_diff(spectral::grid_to_modes(v, modes), spectral::encode_points(ops::reshape(v, {1, 42, 2}), pts, modes)),
            1e-13);
  const Tensor c = spectral::grid_to_modes(v, modes);
  EXPECT_LT(max_abs_diff(ops::reshape(spectral::modes_to_grid(c, modes, grid), {1, 42, 2}),
                         spectral::decode_points(c, pts, modes)),
            1e-12);
}

}  // namespace
}  // namespace geofno
