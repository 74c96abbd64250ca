// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geofno/config.hpp"
#include "geofno/dataset.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

/// Poisson problems -Laplace(u) = f on star-shaped annuli with u = 0 on both
/// boundaries.
///
/// Each sample is described by a design vector
///   [c_0, c_1..c_K, d_1..d_K, e_1..e_K, g_1..g_K, s_1, s_2]
/// giving the outer radius 1 + c_0 + sum c_k cos k theta + d_k sin k theta,
/// the inner radius r_in + sum e_k cos k theta + g_k sin k theta and the
/// source f = 1 + s_1 x + s_2 y. Stored points are 0.5 + scale * x so that
/// every domain sits inside the unit square.
struct SyntheticConfig {
  std::string family = "deformed_annulus_poisson";
  std::size_t n_theta = 32;
  std::size_t n_radial = 12;
  std::size_t modes = 2;
  double outer_offset_bound = 0.2;
  double outer_bound = 0.1;
  double inner_radius = 0.4;
  double inner_bound = 0.05;
  double source_bound = 0.5;
  double min_gap = 0.2;
  double coordinate_scale = 0.3;
  /// The reference solve runs on a mesh refined by this factor per axis.
  std::size_t refine = 2;
  std::size_t train_count = 200;
  std::size_t test_count = 50;
  std::uint64_t seed = 0;
  std::size_t max_retries = 100;

  std::size_t design_size() const { return 1 + 4 * modes + 2; }
  void validate() const;
  std::string to_text() const;
  std::string hash() const;
  static SyntheticConfig from_config(const ConfigFile& file, const std::string& section = "data");
  void write_to(ConfigFile& file, const std::string& section = "data") const;
  bool operator==(const SyntheticConfig&) const = default;
};

/// Physical (unscaled) O-mesh points [n_theta x n_radial x 2] of a design.
Tensor annulus_mesh(const SyntheticConfig& config, std::span<const double> design, std::size_t n_theta,
                    std::size_t n_radial);

/// Points of the stored mesh as an affine function of the design vector:
/// flat points [n_theta * n_radial * 2] = offset + design . basis, in the
/// scaled coordinates. `basis` is [p x 2N], `offset` is [2N].
struct AnnulusBasis {
  Tensor basis;
  Tensor offset;
};
AnnulusBasis annulus_basis(const SyntheticConfig& config);

/// True when the inner and outer boundaries keep at least min_gap apart.
bool valid_design(const SyntheticConfig& config, std::span<const double> design);

/// Builds one record (scaled mesh, source, reference solution) for a design.
SampleRecord synthetic_record(const SyntheticConfig& config, std::span<const double> design);

DatasetManifest synthetic_manifest(const SyntheticConfig& config);

struct SyntheticSplit {
  DatasetBundle train;
  DatasetBundle test;
};

/// Train and test draws come from distinct seed streams.
SyntheticSplit gen_synthetic(const SyntheticConfig& config);

/// Closed-form solution of -Laplace(u) = 1 on the annulus r_in < r < r_out
/// with u = 0 on both circles.
double annulus_closed_form(double r, double r_in, double r_out);

}  // namespace geofno
