// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace geofno {

/// Worker count: GEOFNO_THREADS if set (clamped to >= 1), otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) over contiguous static chunks. Each index is
/// processed exactly once; callers that reduce must do so afterwards in
/// index order to stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace geofno
