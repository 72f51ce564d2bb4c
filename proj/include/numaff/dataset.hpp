#pragma once

#include <array>
#include <string>
#include <vector>

#include "numaff/image.hpp"

namespace numaff {

inline constexpr int kDigitClasses = 10;

/// A canonical image plus a stable identifier ("<digit>/<file name>").
struct Sample {
    std::string id;
    BinaryImage image;
};

/// In-memory dataset: canonical images grouped by digit 0..9.
struct Dataset {
    std::string name;
    std::array<std::vector<Sample>, kDigitClasses> classes;

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& c : classes) n += c.size();
        return n;
    }
};

/// Throws Errc::empty_class naming the dataset and digit if any class is empty.
void require_all_classes(const Dataset& ds);

} // namespace numaff
