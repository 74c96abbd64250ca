// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

/// Compares reverse-mode gradients of a real scalar function against
/// central differences, entry by entry over the raw storage of every
/// parameter (real and imaginary parts of complex entries separately).
///
/// Error per entry is |a - c| / (|a| + |c| + 1e-12). `max_entries` > 0 caps
/// the entries probed per parameter using an even stride.
GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> params, double eps,
                           std::size_t max_entries = 0);

}  // namespace geofno
