// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers, one per parameter in raw (interleaved)
/// layout, so complex parameters are treated as pairs of independent reals.
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState for_params(std::span<const Tensor> params);
  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update. Returns the updated parameter values and
/// advances `state` in place. Deterministic for identical inputs.
std::vector<Tensor> adam_step(std::span<const Tensor> params, std::span<const Tensor> grads, AdamState& state,
                              const AdamConfig& config);

}  // namespace geofno
