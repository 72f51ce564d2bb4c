#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace numaff {

/// One round of the splitmix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over raw bytes. Stable across platforms and runs.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seeded generator with platform-independent derived distributions.
///
/// The engine is std::mt19937_64 (fully specified by the standard); the
/// standard distributions are not, so integer/real/normal draws are done here
/// to keep every sampled sequence bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller (no cached second value).
    double normal();

private:
    std::mt19937_64 engine_;
};

} // namespace numaff
