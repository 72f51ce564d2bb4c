#pragma once

#include <cstdint>
#include <string>

#include "numaff/clustering.hpp"
#include "numaff/simmatrix.hpp"

namespace numaff {

struct Rgb {
    std::uint8_t r, g, b;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kRampLow{0, 0, 139};      ///< similarity 0: dark blue
inline constexpr Rgb kRampHigh{255, 255, 255}; ///< similarity 1: white

/// Linear sRGB interpolation between kRampLow (0) and kRampHigh (1), each
/// channel rounded half-up. Values outside [0, 1] are clamped.
Rgb heat_color(double similarity);

std::string hex_color(Rgb c);

/// Throws Errc::name_mismatch unless the tree's leaves are exactly the
/// matrix's datasets.
void require_consistent(const SimilarityMatrix& matrix, const Dendrogram& tree);

/// Heatmap with rows/columns in the tree's leaf order.
std::string heatmap_svg(const SimilarityMatrix& matrix, const Dendrogram& tree);

/// Heatmap in matrix order.
std::string heatmap_svg(const SimilarityMatrix& matrix);

/// Horizontal dendrogram; the x axis is height = 1 - similarity.
std::string dendrogram_svg(const Dendrogram& tree);

/// Indented text tree, one node per line.
std::string dendrogram_ascii(const Dendrogram& tree);

} // namespace numaff
