// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

/// Truncated frequency set: the full symmetric box {-k_max..k_max} per axis,
/// enumerated lexicographically with the first axis varying slowest.
///
/// In this order mode `i` and mode `size() - 1 - i` are negatives of each
/// other and the zero mode sits at `zero_index()`. The "half set" is the
/// zero mode followed by every mode that is lexicographically positive,
/// i.e. indices [zero_index(), size()).
class ModeSet {
 public:
  ModeSet() = default;
  explicit ModeSet(std::vector<int> k_max);
  static ModeSet cube(std::size_t dim, int k_max);

  std::size_t dim() const noexcept { return k_max_.size(); }
  const std::vector<int>& k_max() const noexcept { return k_max_; }
  std::size_t size() const noexcept { return count_; }
  std::size_t half_size() const noexcept { return count_ - zero_index(); }
  std::size_t zero_index() const noexcept { return count_ / 2; }

  /// Integer frequency vector of mode `index`.
  std::span<const int> mode(std::size_t index) const;
  /// All frequency vectors, row-major [size() x dim()].
  const std::vector<int>& flat() const noexcept { return flat_; }
  std::size_t index_of(std::span<const int> k) const;
  std::size_t negated(std::size_t index) const { return count_ - 1 - index; }

  /// Throws SamplingError unless every grid axis length exceeds 2 k_max.
  void check_nyquist(const std::vector<std::size_t>& grid) const;

  bool operator==(const ModeSet& other) const { return k_max_ == other.k_max_; }

 private:
  std::vector<int> k_max_;
  std::vector<int> flat_;
  std::size_t count_ = 0;
};

/// Per-point weights m(x) of the forward transform; strictly positive.
struct MonitorWeight {
  Tensor weights;  // [N]

  static MonitorWeight ones(std::size_t n);
  void validate(std::size_t n) const;
};

/// Canonical coordinates of a uniform grid, (i_1/s_1, ..., i_d/s_d), listed
/// lexicographically: shape [prod(s) x d].
Tensor uniform_grid_points(const std::vector<std::size_t>& grid);

/// coeffs(k) = (1/N) sum_i m_i v_i exp(-2 pi i <xi_i, k>) for every k in
/// `modes`. v may be real or complex, shape [N x c]; xi is [N x d]. Output
/// is complex [|K| x c]. Differentiable in v, xi and the weights.
Tensor nudft_forward(const Tensor& v, const Tensor& xi, const ModeSet& modes,
                     const std::optional<MonitorWeight>& weight = std::nullopt);

/// out(x_j) = sum_k coeffs(k) exp(+2 pi i <xi_j, k>). Output is complex
/// [M x c]; take ops::real_part for real fields. Differentiable in coeffs
/// and xi_query.
Tensor nudft_inverse(const Tensor& coeffs, const Tensor& xi_query, const ModeSet& modes);

/// Draws random coefficients, synthesizes them on the uniform grid with
/// nudft_inverse, transforms back with nudft_forward, and returns the max
/// abs discrepancy.
double roundtrip_identity_check(const ModeSet& modes, const std::vector<std::size_t>& grid, std::uint64_t seed = 0);
double roundtrip_identity_check(const ModeSet& modes, std::size_t s, std::uint64_t seed = 0);

/// FFT-based Fourier layer on a uniform grid: v [s_1 x ... x s_d x c_in]
/// real, R [|K| x c_in x c_out] complex. Keeps the modes of `modes`, mixes
/// channels per mode, zeroes the rest and returns the real part of the
/// inverse transform, [s_1 x ... x s_d x c_out].
Tensor spectral_conv_uniform(const Tensor& v, const Tensor& weights, const ModeSet& modes);

// Batched half-spectrum kernels. For real fields the coefficients at k and
// -k are conjugate, and the final real part only sees the folded sum
// c(k) + conj(c(-k)); these kernels therefore carry the half set only.
// Every function below has a leading batch axis B.
namespace spectral {

/// R [|K| x ci x co] -> R_half [|H| x ci x co] with R_half(0) = R(0) and
/// R_half(k) = R(k) + conj(R(-k)) for k != 0.
Tensor fold_weights(const Tensor& weights, const ModeSet& modes);

/// Half-set forward transform of real point data: v [B x N x c],
/// xi [B x N x d] -> complex [B x |H| x c]. Optional constant weights [B x N].
Tensor encode_points(const Tensor& v, const Tensor& xi, const ModeSet& modes,
                     const std::optional<Tensor>& weights = std::nullopt);

/// Real part of the half-set inverse transform at query points:
/// coeffs [B x |H| x c] complex, xi [B x M x d] -> real [B x M x c].
Tensor decode_points(const Tensor& coeffs, const Tensor& xi, const ModeSet& modes);

/// Per-mode channel mixing: coeffs [B x H x ci], weights [H x ci x co].
Tensor mix_modes(const Tensor& coeffs, const Tensor& weights);

/// FFT of real grid data [B x s_1 .. s_d x c] (1/N-normalized), restricted
/// to the half set: complex [B x |H| x c].
Tensor grid_to_modes(const Tensor& v, const ModeSet& modes);

/// Places half-set coefficients on the spectrum of a grid, inverse FFT, real
/// part: [B x |H| x c] -> real [B x s_1 .. s_d x c].
Tensor modes_to_grid(const Tensor& coeffs, const ModeSet& modes, const std::vector<std::size_t>& grid);

}  // namespace spectral

}  // namespace geofno
