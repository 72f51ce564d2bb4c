#include "numaff/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include "numaff/error.hpp"

namespace numaff {

std::uint64_t Histogram::total() const { return lower_half() + upper_half(); }

std::uint64_t Histogram::lower_half() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < 128; ++i) s += bins[i];
    return s;
}

std::uint64_t Histogram::upper_half() const {
    std::uint64_t s = 0;
    for (std::size_t i = 128; i < 256; ++i) s += bins[i];
    return s;
}

Histogram histogram(const GrayImage& img) {
    Histogram h;
    for (auto p : img.pixels) ++h.bins[p];
    return h;
}

GrayImage to_gray(std::span<const std::uint8_t> pixels, std::size_t width, std::size_t height,
                  std::size_t channels) {
    if (channels != 1 && channels != 3)
        throw Error(Errc::invalid_argument, "to_gray: channel count must be 1 or 3, got " +
                                                std::to_string(channels));
    if (pixels.size() != width * height * channels)
        throw Error(Errc::shape_mismatch, "to_gray: pixel buffer does not match extents");
    if (channels == 1) return GrayImage(width, height, {pixels.begin(), pixels.end()});

    GrayImage g(width, height);
    for (std::size_t i = 0; i < width * height; ++i) {
        // Integer form of 0.299R + 0.587G + 0.114B with round-half-up.
        const std::uint32_t r = pixels[3 * i], gr = pixels[3 * i + 1], b = pixels[3 * i + 2];
        const std::uint32_t y1000 = 299 * r + 587 * gr + 114 * b;
        g.pixels[i] = static_cast<std::uint8_t>((y1000 + 500) / 1000);
    }
    return g;
}

GrayImage to_gray(const RasterImage& raster) {
    return to_gray(raster.pixels, raster.width, raster.height, raster.channels);
}

Background classify_background(const GrayImage& img) {
    const Histogram h = histogram(img);
    return h.lower_half() <= h.upper_half() ? Background::white : Background::black;
}

GrayImage normalize_polarity(const GrayImage& img) {
    if (classify_background(img) == Background::black) return img;
    GrayImage out = img;
    for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
    return out;
}

std::uint8_t otsu_threshold(const Histogram& hist) {
    using boost::multiprecision::int256_t;

    // Between-class variance at t is D^2 / (N^2 n0 n1) with D = s0 N - S n0.
    // N^2 is common to every candidate, so candidates compare as D^2 / (n0 n1),
    // cross-multiplied to stay in exact integers.
    int256_t n_total = 0, s_total = 0;
    for (int i = 0; i < 256; ++i) {
        n_total += hist.bins[i];
        s_total += int256_t(hist.bins[i]) * i;
    }

    int best_t = -1;
    int256_t best_num = 0, best_den = 1;
    int256_t n0 = 0, s0 = 0;
    for (int t = 0; t < 255; ++t) {
        n0 += hist.bins[t];
        s0 += int256_t(hist.bins[t]) * t;
        const int256_t n1 = n_total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const int256_t d = s0 * n_total - s_total * n0;
        const int256_t num = d * d;
        const int256_t den = n0 * n1;
        if (best_t < 0 || num * best_den > best_num * den) {
            best_t = t;
            best_num = num;
            best_den = den;
        }
    }
    if (best_t >= 0) return static_cast<std::uint8_t>(best_t);

    // Fewer than two occupied intensities: return the occupied one (or 0 if empty).
    for (int i = 0; i < 256; ++i)
        if (hist.bins[i]) return static_cast<std::uint8_t>(i);
    return 0;
}

std::uint8_t otsu_threshold(const GrayImage& img) { return otsu_threshold(histogram(img)); }

BinaryImage binarize(const GrayImage& img, std::uint8_t threshold) {
    BinaryImage b(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) b.pixels[i] = img.pixels[i] > threshold ? 1 : 0;
    return b;
}

double bilinear_source_coord(std::size_t dst, std::size_t in_extent, std::size_t out_extent) {
    const double scale = static_cast<double>(in_extent) / static_cast<double>(out_extent);
    const double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    return std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
}

namespace {

struct Tap {
    std::size_t i0, i1;
    double frac;
};

std::vector<Tap> make_taps(std::size_t in_extent, std::size_t out_extent) {
    std::vector<Tap> taps(out_extent);
    for (std::size_t d = 0; d < out_extent; ++d) {
        const double src = bilinear_source_coord(d, in_extent, out_extent);
        const auto i0 = static_cast<std::size_t>(std::floor(src));
        taps[d] = {i0, std::min(i0 + 1, in_extent - 1), src - static_cast<double>(i0)};
    }
    return taps;
}

template <typename Sample, typename Emit>
void resample(std::size_t in_w, std::size_t in_h, std::size_t out_w, std::size_t out_h,
              Sample&& sample, Emit&& emit) {
    if (in_w == 0 || in_h == 0) throw Error(Errc::invalid_argument, "resize_bilinear: empty input");
    if (out_w == 0 || out_h == 0) throw Error(Errc::invalid_argument, "resize_bilinear: empty output");
    const auto xs = make_taps(in_w, out_w);
    const auto ys = make_taps(in_h, out_h);
    for (std::size_t y = 0; y < out_h; ++y) {
        const Tap& ty = ys[y];
        for (std::size_t x = 0; x < out_w; ++x) {
            const Tap& tx = xs[x];
            const double top = (1.0 - tx.frac) * sample(tx.i0, ty.i0) + tx.frac * sample(tx.i1, ty.i0);
            const double bot = (1.0 - tx.frac) * sample(tx.i0, ty.i1) + tx.frac * sample(tx.i1, ty.i1);
            emit(x, y, (1.0 - ty.frac) * top + ty.frac * bot);
        }
    }
}

} // namespace

BinaryImage resize_bilinear(const BinaryImage& img, std::size_t out_w, std::size_t out_h) {
    BinaryImage out(out_w, out_h);
    resample(
        img.width, img.height, out_w, out_h,
        [&](std::size_t x, std::size_t y) { return static_cast<double>(img.at(x, y)); },
        [&](std::size_t x, std::size_t y, double v) { out.pixels[y * out_w + x] = v >= 0.5 ? 1 : 0; });
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, std::size_t out_w, std::size_t out_h) {
    GrayImage out(out_w, out_h);
    resample(
        img.width, img.height, out_w, out_h,
        [&](std::size_t x, std::size_t y) { return static_cast<double>(img.at(x, y)); },
        [&](std::size_t x, std::size_t y, double v) {
            out.pixels[y * out_w + x] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
        });
    return out;
}

BinaryImage preprocess_pipeline(const GrayImage& img, std::size_t size) {
    const GrayImage normalized = normalize_polarity(img);
    const BinaryImage bin = binarize(normalized, otsu_threshold(normalized));
    return resize_bilinear(bin, size, size);
}

BinaryImage preprocess_pipeline(const RasterImage& raster, std::size_t size) {
    return preprocess_pipeline(to_gray(raster), size);
}

BinaryImage preprocess_file(const std::filesystem::path& path, std::size_t size) {
    return preprocess_pipeline(read_pnm(path), size);
}

} // namespace numaff
