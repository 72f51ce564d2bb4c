#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "numaff/image.hpp"

namespace numaff {

inline constexpr std::size_t kCanonicalSize = 105;

struct Histogram {
    std::array<std::uint64_t, 256> bins{};

    std::uint64_t total() const;
    /// Count of intensities 0..127.
    std::uint64_t lower_half() const;
    /// Count of intensities 128..255.
    std::uint64_t upper_half() const;
};

Histogram histogram(const GrayImage& img);

/// Luminance 0.299R + 0.587G + 0.114B rounded half-up. channels == 1 copies
/// through; any other count than 1 or 3 throws Errc::invalid_argument.
GrayImage to_gray(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height,
                  std::size_t channels);

GrayImage to_gray(const RasterImage& raster);

enum class Background { white, black };

/// White iff the 0..127 half of the histogram is no larger than the 128..255 half.
Background classify_background(const GrayImage& img);

/// Inverts (p -> 255 - p) images with a white background so strokes end up
/// white on black.
GrayImage normalize_polarity(const GrayImage& img);

/// Threshold maximizing between-class variance, where class 0 is p <= t.
/// Smallest maximizer on ties. A single-intensity image returns that intensity.
std::uint8_t otsu_threshold(const GrayImage& img);
std::uint8_t otsu_threshold(const Histogram& hist);

/// pixel -> 1 iff intensity > t.
BinaryImage binarize(const GrayImage& img, std::uint8_t threshold);

/// Source coordinate for output index `dst` under half-pixel centers,
/// clamped to [0, in - 1].
double bilinear_source_coord(std::size_t dst, std::size_t in_extent, std::size_t out_extent);

/// Bilinear resample of a binary raster; interpolated values >= 0.5 become 1.
BinaryImage resize_bilinear(const BinaryImage& img, std::size_t out_w = kCanonicalSize,
                            std::size_t out_h = kCanonicalSize);

/// Bilinear resample of a gray raster, rounded half-up.
GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h);

/// polarity -> otsu -> binarize -> resize to size x size.
BinaryImage preprocess_pipeline(const GrayImage& img, std::size_t size = kCanonicalSize);
BinaryImage preprocess_pipeline(const RasterImage& raster, std::size_t size = kCanonicalSize);

/// Decodes `path` and runs the pipeline. Undecodable files throw Errc::decode
/// with the path in the message.
BinaryImage preprocess_file(const std::filesystem::path& path, std::size_t size = kCanonicalSize);

} // namespace numaff
