#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "numaff/error.hpp"
#include "numaff/image.hpp"
#include "numaff/preprocess.hpp"
#include "numaff/rng.hpp"

using namespace numaff;
using testsupport::otsu_oracle;

namespace {

GrayImage invert(const GrayImage& img) {
    GrayImage out = img;
    for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
    return out;
}

// Digit-like test image: a dark ring on a light background.
GrayImage ring_on_white(std::size_t n) {
    GrayImage img(n, n, 230);
    const double c = (static_cast<double>(n) - 1) / 2, r = static_cast<double>(n) * 0.3;
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double d = std::hypot(static_cast<double>(x) - c, static_cast<double>(y) - c);
            if (std::abs(d - r) < static_cast<double>(n) * 0.06) img.at(x, y) = 20;
        }
    return img;
}

} // namespace

TEST_SUITE("preprocess") {

TEST_CASE("to_gray luminance") {
    const std::vector<std::uint8_t> px{255, 255, 255, 0, 0, 0, 255, 0, 0, 0, 255, 0, 0, 0, 255};
    const GrayImage g = to_gray(px, 5, 1, 3);
    CHECK(g.pixels == std::vector<std::uint8_t>{255, 0, 76, 150, 29});
    CHECK_THROWS_AS(to_gray(px, 5, 1, 2), Error);
    CHECK_THROWS_AS(to_gray(px, 4, 1, 3), Error);
    const std::vector<std::uint8_t> one{7, 9};
    CHECK(to_gray(one, 2, 1, 1).pixels == one);
}

TEST_CASE("to_gray rounds half up") {
    // 0.299*R + 0.587*G + 0.114*B for every gray level of a single channel,
    // checked against exact integer arithmetic.
    for (int v = 0; v < 256; ++v) {
        const std::vector<std::uint8_t> r{static_cast<std::uint8_t>(v), 0, 0};
        const std::vector<std::uint8_t> b{0, 0, static_cast<std::uint8_t>(v)};
        CHECK(to_gray(r, 1, 1, 3).pixels[0] == (299 * v * 2 + 1000) / 2000);
        CHECK(to_gray(b, 1, 1, 3).pixels[0] == (114 * v * 2 + 1000) / 2000);
    }
}

TEST_CASE("histogram sums to the pixel count") {
    Rng rng(1);
    const GrayImage img = testsupport::random_gray(rng, 13, 7);
    const Histogram h = histogram(img);
    CHECK(h.total() == 91);
    CHECK(h.lower_half() + h.upper_half() == 91);
}

TEST_CASE("classify_background cases") {
    CHECK(classify_background(GrayImage(4, 4, 0)) == Background::black);
    CHECK(classify_background(GrayImage(4, 4, 255)) == Background::white);
    GrayImage mixed(8, 8, 200);
    for (int i = 0; i < 4; ++i) mixed.pixels[static_cast<std::size_t>(i)] = 10;
    CHECK(classify_background(mixed) == Background::white);
    GrayImage tie(2, 1, std::vector<std::uint8_t>{127, 128});
    CHECK(classify_background(tie) == Background::white);
}

TEST_CASE("classify_background flips under inversion") {
    Rng rng(2);
    int checked = 0;
    while (checked < 200) {
        const GrayImage img = testsupport::random_gray(rng, 1 + rng.index(9), 1 + rng.index(9));
        const Histogram h = histogram(img);
        if (h.lower_half() == h.upper_half()) continue;
        CHECK(classify_background(img) != classify_background(invert(img)));
        ++checked;
    }
}

TEST_CASE("normalize_polarity") {
    CHECK(normalize_polarity(GrayImage(3, 3, 255)) == GrayImage(3, 3, 0));
    CHECK(normalize_polarity(GrayImage(3, 3, 0)) == GrayImage(3, 3, 0));
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const GrayImage img = testsupport::random_gray(rng, 5, 4);
        const Histogram h = histogram(img);
        if (h.lower_half() == h.upper_half()) continue;
        const GrayImage once = normalize_polarity(img);
        CHECK(classify_background(once) == Background::black);
        CHECK(normalize_polarity(once) == once);
    }
}

TEST_CASE("otsu two-level image picks the smallest separating threshold") {
    GrayImage img(8, 8, 0);
    for (std::size_t i = 0; i < 14; ++i) img.pixels[i] = 255;
    CHECK(otsu_threshold(img) == 0);
    CHECK(otsu_oracle(histogram(img).bins) == 0);
}

TEST_CASE("otsu constant image returns its intensity") {
    for (int v : {0, 1, 77, 254, 255}) {
        const GrayImage img(5, 5, static_cast<std::uint8_t>(v));
        CHECK(otsu_threshold(img) == v);
        CHECK(binarize(img, otsu_threshold(img)).foreground_count() == 0);
    }
}

TEST_CASE("otsu matches the exhaustive oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        Histogram h;
        // Sparse, clustered and dense histograms.
        const int mode = trial % 3;
        const std::size_t nonzero = mode == 0 ? 2 + rng.index(4) : (mode == 1 ? 10 + rng.index(40) : 256);
        for (std::size_t k = 0; k < nonzero; ++k)
            h.bins[rng.index(256)] += 1 + rng.index(mode == 2 ? 5 : 1000);
        CHECK(static_cast<int>(otsu_threshold(h)) == otsu_oracle(h.bins));
    }
}

TEST_CASE("otsu handles counts large enough to overflow 64-bit products") {
    Histogram h;
    h.bins[3] = 4'000'000'000ULL;
    h.bins[200] = 3'999'999'999ULL;
    h.bins[201] = 17;
    h.bins[90] = 1'234'567'891ULL;
    CHECK(static_cast<int>(otsu_threshold(h)) == otsu_oracle(h.bins));
}

TEST_CASE("binarize is the per-pixel predicate") {
    CHECK(binarize(GrayImage(3, 3, 0), 0) == BinaryImage(3, 3, 0));
    CHECK(binarize(GrayImage(3, 3, 255), 0) == BinaryImage(3, 3, 1));
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const GrayImage img = testsupport::random_gray(rng, 6, 5);
        const auto t = static_cast<std::uint8_t>(rng.index(256));
        const BinaryImage b = binarize(img, t);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(b.pixels[i] == (img.pixels[i] > t ? 1 : 0));
    }
}

TEST_CASE("binary image rejects values outside {0,1}") {
    CHECK_THROWS_AS(BinaryImage(2, 1, std::vector<std::uint8_t>{0, 2}), Error);
}

TEST_CASE("bilinear source coordinates") {
    CHECK(bilinear_source_coord(0, 2, 4) == 0.0);  // -0.25 clamped
    CHECK(bilinear_source_coord(1, 2, 4) == 0.25);
    CHECK(bilinear_source_coord(2, 2, 4) == 0.75);
    CHECK(bilinear_source_coord(3, 2, 4) == 1.0);  // 1.25 clamped
    for (std::size_t i = 0; i < 9; ++i) CHECK(bilinear_source_coord(i, 9, 9) == static_cast<double>(i));
}

TEST_CASE("bilinear 2x2 to 4x4 worked example") {
    const BinaryImage in(2, 2, std::vector<std::uint8_t>{0, 1, 0, 1});
    const BinaryImage out = resize_bilinear(in, 4, 4);
    for (std::size_t y = 0; y < 4; ++y) {
        CHECK(out.at(0, y) == 0);
        CHECK(out.at(1, y) == 0);
        CHECK(out.at(2, y) == 1);
        CHECK(out.at(3, y) == 1);
    }
}

TEST_CASE("bilinear constant and identity") {
    CHECK(resize_bilinear(BinaryImage(7, 3, 1)) == BinaryImage(105, 105, 1));
    CHECK(resize_bilinear(BinaryImage(200, 150, 0)) == BinaryImage(105, 105, 0));
    Rng rng(6);
    BinaryImage b(105, 105);
    for (auto& p : b.pixels) p = static_cast<std::uint8_t>(rng.index(2));
    CHECK(resize_bilinear(b, 105, 105) == b);
    const GrayImage g = testsupport::random_gray(rng, 11, 9);
    CHECK(resize_bilinear(g, 11, 9) == g);
}

TEST_CASE("pipeline on a black-on-white digit") {
    const BinaryImage out = preprocess_pipeline(ring_on_white(40));
    CHECK(out.width == kCanonicalSize);
    CHECK(out.height == kCanonicalSize);
    // Strokes are foreground; the background corner is 0.
    CHECK(out.at(0, 0) == 0);
    CHECK(out.foreground_count() > 0);
    CHECK(out.foreground_count() < out.pixels.size() / 2);
    CHECK(preprocess_pipeline(invert(ring_on_white(40))) == out);
}

TEST_CASE("pipeline is idempotent on its outputs") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 20 + rng.index(60);
        const BinaryImage once = preprocess_pipeline(ring_on_white(n), 35);
        CHECK(preprocess_pipeline(to_gray(once), 35) == once);
    }
}

TEST_CASE("pipeline output is binary at the requested size") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const GrayImage img = testsupport::random_gray(rng, 1 + rng.index(50), 1 + rng.index(50));
        const BinaryImage b = preprocess_pipeline(img);
        CHECK(b.width == 105);
        CHECK(b.height == 105);
        for (auto p : b.pixels) CHECK(p <= 1);
    }
}

TEST_CASE("pnm decode") {
    const std::string p5 = "P5\n# comment\n3 2\n255\n" + std::string("\x00\x10\x20\x30\x40\xff", 6);
    const RasterImage r = decode_pnm(p5);
    CHECK(r.width == 3);
    CHECK(r.height == 2);
    CHECK(r.channels == 1);
    CHECK(r.pixels.back() == 255);

    const std::string p6 = "P6 1 1 255\n" + std::string("\xff\x00\x00", 3);
    const RasterImage c = decode_pnm(p6);
    CHECK(c.channels == 3);
    CHECK(to_gray(c).pixels[0] == 76);

    const std::string low = "P5 2 1 1\n" + std::string("\x00\x01", 2);
    CHECK(decode_pnm(low).pixels == std::vector<std::uint8_t>{0, 255});

    for (const std::string bad : {std::string("P2 1 1 255\n0"), std::string("P5 2 2 255\n\x01", 12),
                                  std::string("P5 0 2 255\n"), std::string("P5 1 1 65535\n\x00\x00", 14),
                                  std::string("")}) {
        try {
            decode_pnm(bad);
            FAIL("expected decode error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::decode);
        }
    }
}

TEST_CASE("pgm encode round trip") {
    Rng rng(9);
    const GrayImage g = testsupport::random_gray(rng, 9, 4);
    const std::string bytes = encode_pgm(g);
    CHECK(bytes.rfind("P5\n9 4\n255\n", 0) == 0);
    const RasterImage back = decode_pnm(bytes);
    CHECK(back.pixels == g.pixels);
}

TEST_CASE("undecodable file error names the path") {
    testsupport::TempDir dir("pre");
    const auto path = dir / "broken.pgm";
    write_file(path, "not an image");
    try {
        preprocess_file(path);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::decode);
        CHECK(std::string(e.what()).find("broken.pgm") != std::string::npos);
    }
}

TEST_CASE("pipeline golden") {
    const auto dir = std::filesystem::path(NUMAFF_TEST_DATA);
    const BinaryImage out = preprocess_file(dir / "digit_input.pgm");
    const RasterImage golden = read_pnm(dir / "digit_golden.pgm");
    REQUIRE(golden.width == 105);
    CHECK(encode_pgm(to_gray(out)) == read_file(dir / "digit_golden.pgm"));
}

} // TEST_SUITE
