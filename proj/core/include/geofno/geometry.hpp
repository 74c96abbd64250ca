// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

enum class GeometryKind : std::uint8_t { kPointCloud = 0, kStructuredMesh = 1 };

/// One physical domain sample.
///
/// A point cloud stores points as [N x d]; a structured mesh stores them as
/// [s_1 x ... x s_d x d] so that points.at(i_1, ..., i_d) is the node with
/// that index.
struct Geometry {
  GeometryKind kind = GeometryKind::kPointCloud;
  Tensor points;
  std::optional<Tensor> design_params;       // [p]
  std::optional<std::vector<std::uint8_t>> mask;  // one flag per point

  static Geometry point_cloud(Tensor points, std::optional<Tensor> design_params = std::nullopt);
  static Geometry structured(Tensor points, std::optional<Tensor> design_params = std::nullopt);

  std::size_t dim() const;
  std::size_t point_count() const;
  /// Index extents (s_1, ..., s_d); throws KindError for point clouds.
  std::vector<std::size_t> grid() const;
  /// Points as [N x d] regardless of kind (shares storage).
  Tensor flat_points() const;
  /// The point-cloud view of a structured mesh.
  Geometry as_point_cloud() const;

  /// Throws DimensionError / GeometryError on a broken invariant.
  void validate() const;
};

/// (i_1/s_1, ..., i_d/s_d) at every node of a structured mesh,
/// shape [s_1 x ... x s_d x d]. Ignores the stored coordinates.
Tensor canonical_map(const Geometry& mesh);

/// Radial stretching about a void: fixes 0, r_s and r_e, refines near r_s
/// for alpha < 1 and is the identity for alpha = 1.
double r_mesh_deform(double r, double r_s, double r_e, double alpha);

/// Body-fitted O-type mesh: n_azimuth rays at angles 2 pi i / n_azimuth,
/// n_radial nodes per ray spaced uniformly from r_s to r_e. `r_s` and `r_e`
/// hold one radius per ray, or a single value for all rays. Stored
/// azimuth-major as [n_azimuth x n_radial x 2].
Geometry o_mesh_generate(const std::vector<double>& r_s, const std::vector<double>& r_e, std::size_t n_azimuth,
                         std::size_t n_radial, std::array<double, 2> center = {0.0, 0.0});

struct UniformGridField {
  Tensor values;                    // [s x s x c], zero where masked
  std::vector<std::uint8_t> mask;   // [s x s], 1 where a neighbor lies within 3/s
};

/// Inverse-distance interpolation (4 nearest neighbors, power 2) of point
/// values onto the grid nodes (i/s, j/s).
UniformGridField interp_to_uniform(const Geometry& cloud, const Tensor& values, std::size_t s);

/// Periodic bilinear sampling of grid data [s_1 x s_2 x c] at points
/// [N x 2] in unit-square coordinates. Differentiable in the grid values.
Tensor sample_bilinear(const Tensor& grid_values, const Tensor& points);

}  // namespace geofno
