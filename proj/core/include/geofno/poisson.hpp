// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geofno/geometry.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

struct ReferenceSolution {
  Tensor u;  // same shape as the source
  /// Max over rows of |A u - b| / |A_ii| for the assembled system.
  double residual = 0.0;
};

/// Solves -Laplace(u) = f with u = 0 on both radial ends of a body-fitted
/// O-mesh [n_theta x n_r x 2] (first axis periodic, second axis running
/// from the inner to the outer boundary). Conservative second-order finite
/// differences in the mesh's index coordinates with metric terms, direct
/// sparse LU solve. `source` is [n_theta x n_r] or [n_theta x n_r x 1].
ReferenceSolution solve_reference(const Geometry& mesh, const Tensor& source);

}  // namespace geofno
