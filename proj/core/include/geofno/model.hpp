// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geofno/config.hpp"
#include "geofno/deform.hpp"
#include "geofno/geometry.hpp"
#include "geofno/spectral.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

enum class IoMode : std::uint8_t { kPointCloud = 0, kStructured = 1, kSpatiotemporal = 2 };

std::string to_string(IoMode mode);
IoMode io_mode_from_string(const std::string& name);

/// How a point-cloud model maps physical points to the latent torus.
enum class MapKind : std::uint8_t { kNone = 0, kIdentity = 1, kLearned = 2 };

struct ModelConfig {
  IoMode io_mode = IoMode::kPointCloud;
  std::size_t dim = 2;           // spatial dimension
  std::size_t in_channels = 1;   // raw input field channels
  std::size_t out_channels = 1;
  std::size_t width = 32;
  std::size_t layers = 4;
  /// One entry per latent axis (spatiotemporal models add the time axis).
  std::vector<int> k_max{12, 12};
  /// Latent grid of point-cloud models; structured models use the mesh grid.
  std::vector<std::size_t> latent_grid{32, 32};
  std::size_t lift_hidden = 32;
  std::size_t proj_hidden = 64;
  MapKind map = MapKind::kLearned;
  DeformNetConfig deform;

  /// Input width of the lifting network: fields, coordinates, and the time
  /// channel in spatiotemporal mode.
  std::size_t lift_inputs() const;
  std::size_t latent_dim() const;
  /// Layers l that carry a pointwise bypass W and coordinate bias b.
  bool has_bypass(std::size_t layer) const;

  void validate() const;
  /// Flat key = value rendering, stable across runs (used for hashing and
  /// checkpoints).
  std::string to_text() const;
  static ModelConfig from_config(const ConfigFile& file, const std::string& section = "model");
  void write_to(ConfigFile& file, const std::string& section = "model") const;
  bool operator==(const ModelConfig&) const = default;
};

/// A batch of equally sized point-cloud samples.
struct PointBatch {
  Tensor points;                 // [B x N x d] physical coordinates
  Tensor fields;                 // [B x N x c_in]
  std::optional<Tensor> design;  // [B x p]
  std::optional<Tensor> query;   // [B x M x d]; defaults to `points`
};

/// Geometry-aware Fourier neural operator: lifting P, Fourier layers,
/// projection Q, and an optional learned coordinate map.
///
/// Parameters live in one ordered list; the batched forwards take that list
/// explicitly so a trainer can pass gradient-enabled copies.
class GeoFnoModel {
 public:
  GeoFnoModel(ModelConfig config, std::uint64_t seed);
  GeoFnoModel(ModelConfig config, std::vector<Tensor> params);

  const ModelConfig& config() const noexcept { return config_; }
  const ModeSet& modes() const noexcept { return modes_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }
  const std::vector<std::string>& param_names() const noexcept { return names_; }
  void set_params(std::vector<Tensor> params);

  static std::vector<std::string> param_names(const ModelConfig& config);
  static std::vector<Shape> param_shapes(const ModelConfig& config);
  static std::vector<Dtype> param_dtypes(const ModelConfig& config);

  /// [B x N x c_in] fields on [B x N x d] points -> [B x M x c_out].
  Tensor forward_points(std::span<const Tensor> params, const PointBatch& batch) const;
  /// Structured meshes [B x s_1 .. s_d x d] with fields [B x s.. x c_in].
  Tensor forward_grid(std::span<const Tensor> params, const Tensor& points, const Tensor& fields) const;
  /// 2-d meshes [B x s_1 x s_2 x 2], fields [B x s_1 x s_2 x c_in], T steps
  /// -> [B x s_1 x s_2 x T x c_out].
  Tensor forward_time(std::span<const Tensor> params, const Tensor& points, const Tensor& fields,
                      std::size_t steps) const;

  /// The pointwise lifting network P on [..., lift_inputs()] features.
  Tensor lift(std::span<const Tensor> params, const Tensor& features) const;
  /// Computational coordinates of physical points [B x N x d].
  Tensor map_points(std::span<const Tensor> params, const Tensor& points, const std::optional<Tensor>& design) const;

 private:
  struct Layout {
    std::size_t lift = 0;
    std::vector<std::size_t> spectral;
    std::vector<std::size_t> bypass;  // index of W; bias weight and bias follow
    std::size_t proj = 0;
    std::size_t deform = 0;
    std::size_t deform_count = 0;
  };
  static Layout layout_for(const ModelConfig& config);
  Tensor fourier_stack(std::span<const Tensor> params, Tensor v, const std::vector<std::size_t>& grid,
                       std::size_t first, std::size_t last) const;
  Tensor latent_layer(std::span<const Tensor> params, const Tensor& v, std::size_t layer,
                      const std::vector<std::size_t>& grid, bool activate) const;

  ModelConfig config_;
  ModeSet modes_;
  Layout layout_;
  std::vector<std::string> names_;
  std::vector<Tensor> params_;
};

/// Single-sample entry points.
Tensor lift(const GeoFnoModel& model, const Tensor& features);
Tensor forward_structured(const GeoFnoModel& model, const Geometry& mesh, const Tensor& fields);
Tensor forward_pointcloud(const GeoFnoModel& model, const Geometry& cloud, const Tensor& fields,
                          const std::optional<Tensor>& query = std::nullopt);
Tensor forward_spatiotemporal(const GeoFnoModel& model, const Geometry& mesh, const Tensor& fields,
                              std::size_t steps);

/// Trainable scalar count; complex entries count twice.
std::size_t count_params(const ModelConfig& config);
std::size_t count_params(const GeoFnoModel& model);

}  // namespace geofno
