#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "numaff/siamese.hpp"
#include "numaff/simmatrix.hpp"
#include "numaff/training.hpp"

namespace numaff {

/// Settings read from a flat `key = value` file. '#' starts a comment.
///
/// Recognized keys: preset, epochs_max, batch_size, pairs_per_epoch,
/// accuracy_lo, accuracy_hi, target_accuracy_window (as "lo,hi"), lr, seed,
/// precision (f32 | f64), samples_per_digit (alias N), master_seed.
struct RunConfig {
    Preset preset = Preset::small;
    TrainConfig train;
    SamplingConfig sampling;
};

/// Raw key/value pairs; a repeated key keeps its last value. Errc::decode for
/// lines without '='.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Applies one setting. Errc::invalid_argument for unknown keys or
/// unparseable values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Writes every field back out in the same format.
std::string config_text(const RunConfig& config);

Precision parse_precision(std::string_view s);
const char* precision_name(Precision p);

} // namespace numaff
