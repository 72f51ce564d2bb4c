#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace numaff {

/// 8-bit single-channel raster, row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0);
    GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    std::uint8_t& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Raster restricted to {0,1}; 1 marks stroke (foreground).
struct BinaryImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    BinaryImage() = default;
    BinaryImage(std::size_t w, std::size_t h, std::uint8_t fill = 0);
    /// Throws Errc::invalid_argument if any pixel is outside {0,1}.
    BinaryImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

    std::size_t foreground_count() const;

    friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

/// Decoded PNM raster with 1 (P5) or 3 (P6) interleaved channels.
struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;
};

/// Decodes binary P5/P6 with maxval <= 255. Samples are rescaled to 0..255
/// when maxval < 255. Throws Errc::decode on malformed input.
RasterImage decode_pnm(std::string_view bytes);

/// Reads and decodes a PNM file; errors name the path.
RasterImage read_pnm(const std::filesystem::path& path);

/// Binary P5, maxval 255: "P5\n<w> <h>\n255\n" followed by the raw bytes.
std::string encode_pgm(const GrayImage& img);

void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Stroke pixels as 255 on a 0 background.
GrayImage to_gray(const BinaryImage& img);

/// Truncating write; creates parent directories. Throws Errc::io.
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

} // namespace numaff
