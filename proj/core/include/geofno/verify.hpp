// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geofno/model.hpp"

namespace geofno {

struct SuiteCase {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<SuiteCase> cases;
  double seconds = 0.0;

  bool passed() const;
  /// One PASS/FAIL line per case, failing cases followed by their detail.
  std::string to_text() const;
};

/// "transforms", "gradients", "reduction", "solver".
const std::vector<std::string>& suite_names();
/// Throws ConfigError for an unknown suite name.
SuiteReport run_suite(const std::string& name, std::uint64_t seed = 0);

/// Structured model on `grid` computing the same map as a point-cloud model
/// with the identity coordinate map on grid-aligned points: the shared
/// parameters are copied and the bypass of the first and last layers is
/// zero.
GeoFnoModel structured_twin(const GeoFnoModel& point_model);

/// Small point-cloud model for gradient checks: width 2, three Fourier layers, a
/// conditioned DeformNet whose last layer is randomized.
GeoFnoModel tiny_point_model(std::uint64_t seed, std::size_t conditioning = 2);

/// grad_check of a tiny_point_model loss at eps = 1e-5, one case per
/// parameter group. Parameters are drawn from U[-scale, scale).
std::vector<SuiteCase> point_model_gradient_cases(std::uint64_t seed, double scale = 1.0);

}  // namespace geofno
