#pragma once

// Helpers and reference implementations shared by the unit tests and the
// acceptance runner. Oracles here deliberately avoid the library code paths
// they check.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "numaff/image.hpp"
#include "numaff/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Fresh, empty scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() /
                ("numaff_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    static int& counter() {
        static int n = 0;
        return n;
    }
    fs::path path_;
};

/// Exhaustive Otsu: between-class variance w0*w1*(mu0-mu1)^2 in exact
/// rationals for every threshold splitting the pixels into two non-empty
/// classes; the smallest maximizer wins. With a single populated bin, that
/// bin's intensity.
inline int otsu_oracle(const std::array<std::uint64_t, 256>& bins) {
    using boost::multiprecision::cpp_rational;
    cpp_rational total = 0, weighted = 0;
    for (int i = 0; i < 256; ++i) {
        total += bins[i];
        weighted += cpp_rational(bins[i]) * i;
    }
    int best_t = -1;
    cpp_rational best = -1;
    cpp_rational n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += bins[t];
        s0 += cpp_rational(bins[t]) * t;
        const cpp_rational n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const cpp_rational w0 = n0 / total, w1 = n1 / total;
        const cpp_rational mu0 = s0 / n0, mu1 = (weighted - s0) / n1;
        const cpp_rational diff = mu0 - mu1;
        const cpp_rational v = w0 * w1 * diff * diff;
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    if (best_t >= 0) return best_t;
    for (int i = 0; i < 256; ++i)
        if (bins[i]) return i;
    return 0;
}

/// Adam written out from the textbook recurrence, one scalar at a time.
struct ScalarAdam {
    double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0, v = 0;
    int t = 0;

    double step(double x, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, t));
        const double vhat = v / (1 - std::pow(b2, t));
        return x - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

/// Random gray image of the given size.
inline numaff::GrayImage random_gray(numaff::Rng& rng, std::size_t w, std::size_t h) {
    numaff::GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

inline std::string slurp(const fs::path& p) { return numaff::read_file(p); }

} // namespace testsupport
