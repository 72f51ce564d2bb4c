#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "numaff/dataset.hpp"
#include "numaff/image.hpp"

namespace numaff {

/// Files of one dataset laid out as root/<digit>/<image>.pgm.
struct DatasetManifest {
    std::string name;
    std::filesystem::path root;
    std::array<std::vector<std::filesystem::path>, kDigitClasses> files;

    std::array<std::size_t, kDigitClasses> counts() const;
};

/// Lists root/0 .. root/9, keeping *.pgm and *.ppm files sorted
/// lexicographically. Errc::missing_class, Errc::empty_class and
/// Errc::unreadable_file report the respective layout defects.
DatasetManifest scan_dataset(const std::filesystem::path& root, std::string name);

/// Dataset name derived from the root directory's last component.
std::string dataset_name_from_root(const std::filesystem::path& root);

std::string manifest_json(const DatasetManifest& manifest);
DatasetManifest parse_manifest_json(std::string_view text);

/// Runs the preprocessing pipeline on every file at `image_size`.
Dataset load_dataset(const DatasetManifest& manifest, std::size_t image_size);

// --- synthetic families ------------------------------------------------------

/// Deterministic recipe for one synthetic dataset. Datasets sharing a
/// glyph_set form a family; seed and magnitudes make the variants.
struct SynthSpec {
    std::string family_id = "synth";
    std::uint32_t glyph_set = 0;
    std::uint64_t seed = 0;
    std::size_t per_class = 20;
    double rotation_deg = 0.0; ///< max |rotation|
    double shear = 0.0;        ///< max |horizontal shear factor|
    double jitter_px = 0.0;    ///< max |translation| per axis
    double thickness_delta = 0.0;
    double base_thickness = 2.5;
    std::size_t image_size = 32;
    bool white_on_black = false;
};

void validate_synth_spec(const SynthSpec& spec);

/// Number of hand-authored glyph sets; higher ids are generated procedurally.
inline constexpr std::uint32_t kAuthoredGlyphSets = 2;

/// Renders image `index` of class `digit` (black strokes on white unless
/// white_on_black).
GrayImage synthesize_glyph(const SynthSpec& spec, int digit, std::size_t index);

/// Writes root/<digit>/<digit>_<index>.pgm for every image and returns the
/// scanned manifest (named after family_id).
DatasetManifest generate_synthetic_family(const SynthSpec& spec, const std::filesystem::path& root);

} // namespace numaff
