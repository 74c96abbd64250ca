// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geofno/rng.hpp"
#include "geofno/tensor.hpp"

namespace geofno::nn {

/// Dense layer W [in x out], b [out] drawn from U(-1/sqrt(in), 1/sqrt(in)),
/// or all zeros.
std::pair<Tensor, Tensor> init_dense(std::size_t in, std::size_t out, Rng& rng, bool zero = false);

/// Pointwise network over the last axis. `params` holds (W_0, b_0, W_1, b_1,
/// ...); GeLU follows every layer except the last.
Tensor mlp(const Tensor& x, std::span<const Tensor> params);

/// Scalar count of the dense stack with the given layer sizes
/// (sizes[0] = input width).
std::size_t mlp_param_count(const std::vector<std::size_t>& sizes);

}  // namespace geofno::nn
