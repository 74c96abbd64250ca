// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "geofno/model.hpp"
#include "geofno/training.hpp"

namespace geofno {

/// Single-file checkpoint: magic "GFNC", u32 version, u64 manifest length
/// and manifest text, u32 entry count, then (u32 name length, name, u64
/// length, GFNO blob) per entry, and a trailing u64 FNV-1a of all
/// preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  std::vector<Tensor> params;
  std::optional<TrainConfig> train_config;
  std::optional<TrainState> state;
  std::optional<std::string> rng_state;

  GeoFnoModel model() const { return GeoFnoModel(config, params); }
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
/// Validates the checksum before anything else; a corrupted file never
/// yields a partial checkpoint.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const GeoFnoModel& model, const std::optional<TrainState>& state,
                     const std::filesystem::path& path, const std::optional<TrainConfig>& train_config = std::nullopt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace geofno
