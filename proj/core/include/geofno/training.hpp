// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geofno/config.hpp"
#include "geofno/dataset.hpp"
#include "geofno/model.hpp"
#include "geofno/optim.hpp"
#include "geofno/tensor.hpp"

namespace geofno {

using Mask = std::vector<std::uint8_t>;

/// ||pred - truth|| / ||truth|| over the masked points. A mask holds one
/// flag per row of the leading dimensions, i.e. per point; all channels of
/// a point share its flag.
Tensor relative_l2(const Tensor& pred, const Tensor& truth, const std::optional<Mask>& mask = std::nullopt);
/// relative_l2 restricted to a required mask.
Tensor masked_loss(const Tensor& pred, const Tensor& truth, const Mask& mask);
/// Mean over the leading batch axis of per-sample relative L2 errors.
/// `masks`, when given, holds one per-point mask per sample.
Tensor batch_relative_l2(const Tensor& pred, const Tensor& truth, const std::vector<Mask>* masks = nullptr);

struct TrainConfig {
  std::size_t epochs = 500;
  double initial_lr = 1e-3;
  std::size_t lr_halving_period = 100;
  std::size_t batch_size = 20;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Abort when the epoch loss exceeds this multiple of the first batch loss.
  double divergence_factor = 1e3;

  void validate() const;
  std::string to_text() const;
  std::string hash() const;
  static TrainConfig from_config(const ConfigFile& file, const std::string& section = "train");
  void write_to(ConfigFile& file, const std::string& section = "train") const;
  bool operator==(const TrainConfig&) const = default;
};

/// initial_lr * 0.5^floor(epoch / lr_halving_period).
double learning_rate(const TrainConfig& config, std::size_t epoch);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_err = 0.0;
  double test_err = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;  // cumulative
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::string config_hash;

  double final_train() const;
  double final_test() const;
  /// One line per epoch followed by a `[summary]` block of key = value lines.
  std::string to_text(bool with_wall_time = true) const;
  /// Equality of everything except wall times.
  bool same_metrics(const TrainReport& other) const;
};

/// Everything needed to continue an interrupted run exactly.
struct TrainState {
  AdamState optimizer;
  std::size_t next_epoch = 0;
  double initial_loss = 0.0;
  TrainReport report;
};

struct TrainOptions {
  /// Stop after this epoch count even if cfg.epochs is larger.
  std::optional<std::size_t> stop_after;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  GeoFnoModel model;
  TrainState state;
  const TrainReport& report() const noexcept { return state.report; }
};

/// Mini-batch Adam on the mean per-sample relative L2 with a seeded
/// per-epoch shuffle. Pass `resume` to continue from a saved state.
TrainResult train(const GeoFnoModel& model, const DatasetBundle& train_set, const DatasetBundle& test_set,
                  const TrainConfig& config, const std::optional<TrainState>& resume = std::nullopt,
                  const TrainOptions& options = {});

struct EvalResult {
  double mean = 0.0;
  std::vector<double> per_sample;
  double seconds_per_instance = 0.0;

  double median() const;
  double max() const;
};

EvalResult evaluate(const GeoFnoModel& model, const DatasetBundle& dataset);

/// Grid bundle for the interpolation baseline: each record is resampled
/// onto an s x s uniform grid (interp_to_uniform), an extra input channel
/// carries the coverage mask and the loss mask is the same coverage.
DatasetBundle interpolate_bundle(const DatasetBundle& dataset, std::size_t s);
/// Baseline error at the original points: the grid prediction is sampled
/// back bilinearly and compared with the original targets.
EvalResult evaluate_interpolated(const GeoFnoModel& grid_model, const DatasetBundle& dataset, std::size_t s);

}  // namespace geofno
