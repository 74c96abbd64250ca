// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geofno/geometry.hpp"
#include "geofno/model.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

/// One training example: a domain, the input field on its points and the
/// target field.
///
/// Fields follow the point layout of the geometry with channels last:
/// [N x c] for point clouds, [s_1 .. s_d x c] for structured meshes, and
/// [s_1 x s_2 x T x c] for spatiotemporal targets.
struct SampleRecord {
  Geometry geometry;
  Tensor input;
  Tensor output;
  /// Per-point loss mask; points with 0 are excluded from the loss.
  std::optional<std::vector<std::uint8_t>> mask;
};

struct DatasetManifest {
  std::string problem = "unnamed";
  IoMode io_mode = IoMode::kPointCloud;
  std::size_t dim = 2;
  std::vector<std::string> input_channels{"f"};
  std::vector<std::string> input_units{"1"};
  std::vector<std::string> output_channels{"u"};
  std::vector<std::string> output_units{"1"};
  std::string generator_hash = "none";

  bool operator==(const DatasetManifest&) const = default;
};

struct DatasetBundle {
  DatasetManifest manifest;
  std::vector<SampleRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  /// Checks every record against the manifest's io_mode, dimension and
  /// channel counts.
  void validate() const;
};

/// True when both bundles hold bit-identical manifests and records.
bool bundles_equal(const DatasetBundle& a, const DatasetBundle& b);

/// Writes `manifest.txt` and one GFNO blob per array into `dir` (created if
/// missing). Existing sample files of the same names are overwritten.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

/// Optional CSV export of sample `index` (x, y[, z], inputs, outputs) for plotting.
void export_sample_csv(const DatasetBundle& bundle, std::size_t index, const std::filesystem::path& path);

}  // namespace geofno
