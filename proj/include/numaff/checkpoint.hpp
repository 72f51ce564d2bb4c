#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "numaff/siamese.hpp"

namespace numaff {

// Checkpoint layout, all integers and floats little-endian:
//
//   "SIAM"                     4 bytes magic
//   u32 version                kCheckpointVersion
//   u32 preset id              Preset enum value
//   u64 init seed
//   u32 epochs run
//   f32 final loss             NaN when no epoch ran
//   u32 tensor count
//   per tensor: u32 rank, rank x u32 extents, prod(extents) x f32
//
// Nothing may follow the last tensor.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingMeta {
    std::uint32_t epochs_run = 0;
    float final_loss = 0.0f;
};

struct Checkpoint {
    SiameseModel model;
    TrainingMeta meta;
};

std::string encode_checkpoint(const SiameseModel& model, const TrainingMeta& meta);

/// Errc::bad_magic, Errc::bad_version, Errc::truncated for the respective
/// defects; Errc::shape_mismatch when tensors disagree with the preset.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const SiameseModel& model, const TrainingMeta& meta,
                     const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace numaff
