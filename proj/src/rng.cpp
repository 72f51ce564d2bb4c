#include "numaff/rng.hpp"

#include <cmath>
#include <numbers>

namespace numaff {

std::size_t Rng::index(std::size_t n) {
    const std::uint64_t bound = n;
    // Reject the low sliver that would bias the modulo.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x >= threshold) return static_cast<std::size_t>(x % bound);
    }
}

double Rng::normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace numaff
