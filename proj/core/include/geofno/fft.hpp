// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

namespace fft {

/// Unnormalized in-place 1-D DFT of any length. `inverse` selects the
/// e^{+2 pi i jk/n} kernel. Composite lengths use mixed-radix Cooley-Tukey;
/// large prime factors fall back to Bluestein's chirp-z algorithm.
void transform(std::span<complex> data, bool inverse);

/// Unnormalized in-place transform of a row-major complex array of `shape`
/// along each listed axis.
void transform_axes(std::span<complex> data, const Shape& shape, std::span<const std::size_t> axes, bool inverse);

}  // namespace fft

namespace ops {

/// Multi-axis FFT of a complex tensor. The forward transform is scaled by
/// 1/N (N = product of transformed lengths); the inverse is unscaled, so
/// inverse(forward(v)) == v.
Tensor fft_nd(const Tensor& v, const std::vector<std::size_t>& axes, bool inverse);

}  // namespace ops

}  // namespace geofno
