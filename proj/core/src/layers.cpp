// SPDX-License-Identifier: Apache-2.0
#include "geofno/layers.hpp"

#include <cmath>

#include "geofno/error.hpp"
#include "geofno/ops.hpp"

namespace geofno::nn {

std::pair<Tensor, Tensor> init_dense(std::size_t in, std::size_t out, Rng& rng, bool zero) {
  std::vector<double> w(in * out, 0.0), b(out, 0.0);
  if (!zero) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& x : w) x = rng.uniform(-bound, bound);
    for (auto& x : b) x = rng.uniform(-bound, bound);
  }
  return {Tensor({in, out}, std::move(w)), Tensor({out}, std::move(b))};
}

Tensor mlp(const Tensor& x, std::span<const Tensor> params) {
  if (params.empty() || params.size() % 2 != 0) throw DimensionError("mlp: parameters must come in (W, b) pairs");
  Tensor h = x;
  for (std::size_t i = 0; i < params.size(); i += 2) {
    h = ops::linear(h, params[i], params[i + 1]);
    if (i + 2 < params.size()) h = ops::gelu(h);
  }
  return h;
}

std::size_t mlp_param_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) n += sizes[i] * sizes[i + 1] + sizes[i + 1];
  return n;
}

}  // namespace geofno::nn
