// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "geofno/rng.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

/// [..., d] -> [..., d + d m]: the raw coordinates followed by
/// sin(2^i 2 pi x_j) for j = 0..d-1 (outer) and i = 0..m-1 (inner).
Tensor sinusoidal_features(const Tensor& x, std::size_t m);

struct DeformNetConfig {
  std::size_t dim = 2;
  std::size_t frequencies = 8;
  std::vector<std::size_t> hidden{32, 32};
  /// Length of the design-parameter vector fed alongside the coordinates;
  /// 0 means the net sees coordinates only.
  std::size_t conditioning = 0;

  std::size_t input_width() const { return dim + dim * frequencies + conditioning; }
  std::vector<std::size_t> layer_sizes() const;
  bool operator==(const DeformNetConfig&) const = default;
};

/// Residual coordinate network xi = x + f(x, a), wrapped onto [0, 1)^d.
/// The last dense layer starts at zero, so a fresh net is the identity.
class DeformNet {
 public:
  DeformNet(DeformNetConfig config, Rng& rng);
  DeformNet(DeformNetConfig config, std::vector<Tensor> params);

  const DeformNetConfig& config() const noexcept { return config_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }

  static std::vector<Shape> param_shapes(const DeformNetConfig& config);
  static std::vector<Tensor> init_params(const DeformNetConfig& config, Rng& rng);

  /// x is [N x d] with a [p], or [B x N x d] with a [B x p].
  static Tensor apply(const DeformNetConfig& config, std::span<const Tensor> params, const Tensor& x,
                      const std::optional<Tensor>& a);
  Tensor operator()(const Tensor& x, const std::optional<Tensor>& a = std::nullopt) const {
    return apply(config_, params_, x, a);
  }

 private:
  DeformNetConfig config_;
  std::vector<Tensor> params_;
};

/// Per-ray radii about a center; ray k points at angle 2 pi k / rays and
/// radii between rays are interpolated linearly in angle.
struct RadialProfile {
  std::array<double, 2> center{0.5, 0.5};
  std::vector<double> r_s;
  std::vector<double> r_e;
};

/// Physical -> computational map phi^{-1}.
class CoordinateMap {
 public:
  enum class Variant { kIdentity, kCanonical, kRMesh, kOMesh, kLearned };

  static CoordinateMap identity(std::size_t dim);
  /// Index map of a structured mesh with the given extents.
  static CoordinateMap canonical(std::vector<std::size_t> grid);
  /// Inverse of the radial stretching r_mesh_deform about the profile center.
  static CoordinateMap r_mesh(RadialProfile profile, double alpha);
  /// (angle / 2 pi, radial fraction scaled to the O-mesh index spacing).
  static CoordinateMap o_mesh(RadialProfile profile, std::size_t n_radial);
  static CoordinateMap learned(DeformNet net);

  Variant variant() const noexcept { return variant_; }
  std::size_t dim() const noexcept { return dim_; }
  const DeformNet& net() const;
  const std::vector<std::size_t>& grid() const noexcept { return grid_; }
  const RadialProfile& profile() const noexcept { return profile_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t n_radial() const noexcept { return n_radial_; }

 private:
  Variant variant_ = Variant::kIdentity;
  std::size_t dim_ = 2;
  std::vector<std::size_t> grid_;
  RadialProfile profile_;
  double alpha_ = 1.0;
  std::size_t n_radial_ = 2;
  std::optional<DeformNet> net_;
};

/// xi = phi^{-1}(x) wrapped onto [0, 1)^d. x is [N x d] (or [B x N x d]
/// for the identity and learned variants); `a` is the design-parameter
/// vector required by a conditioned learned map.
Tensor deform_inverse(const CoordinateMap& map, const Tensor& x, const std::optional<Tensor>& a = std::nullopt);

}  // namespace geofno
