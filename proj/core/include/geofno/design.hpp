// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geofno/config.hpp"
#include "geofno/model.hpp"
#include "geofno/synthetic.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

/// Outward normals and arc weights of a closed polyline [N x 2], traversed
/// counter-clockwise. Node i gets the normal of the chord p_{i+1} - p_{i-1}
/// and half its length as weight, so sum(n ds) vanishes exactly.
struct BoundaryQuadrature {
  Tensor normals;  // [N x 2]
  Tensor weights;  // [N]
};
BoundaryQuadrature boundary_quadrature(const Tensor& polyline);

/// sum_i field_i * n_axis,i * ds_i, differentiable in `field` ([N] or [N x 1]).
Tensor boundary_functional(const Tensor& field, const BoundaryQuadrature& boundary, std::size_t axis);

/// One evaluation of a design objective; components are reported alongside.
struct DesignEvaluation {
  Tensor objective;
  /// Part of the objective that depends on the predicted field; this is what
  /// verify_design compares against the reference solver.
  Tensor field_objective;
  std::vector<std::pair<std::string, Tensor>> components;
};

struct DesignProblem {
  std::vector<double> initial;
  std::vector<double> lower;
  std::vector<double> upper;
  /// theta [q] (grad-enabled during optimization) -> objective.
  std::function<DesignEvaluation(const Tensor& theta)> evaluate;
  /// Field objective recomputed with the reference solver, if available.
  std::function<double(const std::vector<double>& theta)> reference;

  void validate() const;
};

struct DesignIterate {
  std::size_t iteration = 0;
  std::vector<double> theta;
  double objective = 0.0;
  std::vector<std::pair<std::string, double>> components;
  double grad_norm = 0.0;
};

struct DesignTrace {
  std::vector<DesignIterate> iterations;
  /// Whitespace-separated table with a header line.
  std::string to_text() const;
};

struct DesignResult {
  DesignTrace trace;
  std::vector<double> theta;
  double objective = 0.0;
};

/// Projected Adam descent: theta is clipped to the bounds after every step.
DesignResult optimize_design(const DesignProblem& problem, std::size_t steps = 100, double lr = 1e-2);

struct DesignVerification {
  double surrogate = 0.0;
  double solver = 0.0;
  /// |surrogate - solver| / |solver|
  double gap = 0.0;
};
DesignVerification verify_design(const DesignProblem& problem, const std::vector<double>& theta);

struct DesignScan {
  std::vector<double> grid;
  std::vector<double> values;
  std::size_t best = 0;
};
/// Objective on `points` equally spaced values of a one-parameter problem.
DesignScan scan_design(const DesignProblem& problem, std::size_t points = 101);

/// Weights of the synthetic design objective
///   J = -w_mean mean(u) + w_reg |theta - theta_ref|^2 + w_drag drag - w_lift lift
/// where drag and lift are boundary_functional along x and y on the outer
/// boundary.
struct DesignObjectiveConfig {
  double w_mean = 1.0;
  double w_reg = 1.0;
  double w_drag = 0.0;
  double w_lift = 0.0;
  /// Indices of the design vector that are optimized; the rest stay at base.
  std::vector<std::size_t> free{0};
  std::vector<double> lower{-0.2};
  std::vector<double> upper{0.2};
  std::vector<double> theta_ref{0.0};
  /// Full design vector; empty means all zeros.
  std::vector<double> base;

  static DesignObjectiveConfig from_config(const ConfigFile& file, const std::string& section = "design");
  void write_to(ConfigFile& file, const std::string& section = "design") const;
};

/// Synthetic annulus design through a frozen point-cloud model. The
/// reference objective re-solves the Poisson problem at the design.
DesignProblem synthetic_design_problem(const GeoFnoModel& model, const SyntheticConfig& data,
                                       const DesignObjectiveConfig& objective);

/// J = sum_i w_i (theta_i - c_i)^2: analytic stand-in for the surrogate with
/// the reference equal to the objective itself.
DesignProblem quadratic_design_problem(std::vector<double> center, std::vector<double> weights,
                                       std::vector<double> lower, std::vector<double> upper,
                                       std::vector<double> initial);

/// Writes the full design vector's scaled mesh as a GFNO blob.
void export_design_geometry(const SyntheticConfig& data, const DesignObjectiveConfig& objective,
                            const std::vector<double>& theta, const std::filesystem::path& path);

}  // namespace geofno
