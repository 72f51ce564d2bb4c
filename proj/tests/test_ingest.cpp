#include "doctest.h"
#include "support.hpp"

#include "numaff/error.hpp"
#include "numaff/ingest.hpp"
#include "numaff/preprocess.hpp"

using namespace numaff;
namespace fs = std::filesystem;

namespace {

void make_tree(const fs::path& root, std::size_t per_class, int skip_class = -1) {
    for (int d = 0; d < kDigitClasses; ++d) {
        if (d == skip_class) continue;
        fs::create_directories(root / std::to_string(d));
        for (std::size_t i = 0; i < per_class; ++i)
            write_pgm(root / std::to_string(d) / ("img" + std::to_string(per_class - i) + ".pgm"), GrayImage(4, 4, 9));
    }
}

double overlap(const BinaryImage& a, const BinaryImage& b) {
    std::size_t both = 0, either = 0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        both += a.pixels[i] & b.pixels[i];
        either += a.pixels[i] | b.pixels[i];
    }
    return either ? static_cast<double>(both) / static_cast<double>(either) : 1.0;
}

SynthSpec variant(std::uint32_t glyph_set, std::uint64_t seed) {
    SynthSpec s;
    s.glyph_set = glyph_set;
    s.seed = seed;
    s.rotation_deg = 10;
    s.shear = 0.1;
    s.jitter_px = 1.0;
    s.thickness_delta = 0.5;
    return s;
}

} // namespace

TEST_SUITE("ingest") {

TEST_CASE("scan counts one file per class") {
    testsupport::TempDir dir("scan1");
    make_tree(dir.path(), 1);
    const DatasetManifest m = scan_dataset(dir.path(), "one");
    for (auto c : m.counts()) CHECK(c == 1);
    CHECK(m.name == "one");
}

TEST_CASE("scan sorts paths lexicographically") {
    testsupport::TempDir dir("scan3");
    make_tree(dir.path(), 3);
    write_file(dir / "4/notes.txt", "ignored");
    const DatasetManifest m = scan_dataset(dir.path(), "three");
    std::vector<fs::path> all;
    for (const auto& cls : m.files) all.insert(all.end(), cls.begin(), cls.end());
    CHECK(all.size() == 30);
    for (int d = 0; d < kDigitClasses; ++d) {
        const auto& f = m.files[d];
        REQUIRE(f.size() == 3);
        CHECK(f[0] == dir.path() / std::to_string(d) / "img1.pgm");
        CHECK(f[1] == dir.path() / std::to_string(d) / "img2.pgm");
        CHECK(f[2] == dir.path() / std::to_string(d) / "img3.pgm");
    }
}

TEST_CASE("scan layout errors are distinct") {
    auto code_of = [](const fs::path& root) {
        try {
            scan_dataset(root, "x");
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::decode;
    };
    testsupport::TempDir missing("scanm");
    make_tree(missing.path(), 1, 7);
    CHECK(code_of(missing.path()) == Errc::missing_class);

    testsupport::TempDir empty("scane");
    make_tree(empty.path(), 1);
    fs::remove(empty / "2/img1.pgm");
    CHECK(code_of(empty.path()) == Errc::empty_class);

    testsupport::TempDir unreadable("scanu");
    make_tree(unreadable.path(), 1);
    write_file(unreadable / "5/zero.pgm", "");
    CHECK(code_of(unreadable.path()) == Errc::unreadable_file);

    CHECK(code_of(missing / "nope") == Errc::io);
}

TEST_CASE("manifest json round trip") {
    testsupport::TempDir dir("mani");
    make_tree(dir.path(), 2);
    const DatasetManifest m = scan_dataset(dir.path(), "mf");
    const DatasetManifest back = parse_manifest_json(manifest_json(m));
    CHECK(back.name == m.name);
    CHECK(back.files == m.files);
    CHECK(back.counts() == m.counts());
    CHECK_THROWS_AS(parse_manifest_json("{"), Error);
}

TEST_CASE("dataset name from root") {
    CHECK(dataset_name_from_root("/data/latin") == "latin");
    CHECK(dataset_name_from_root("/data/latin/") == "latin");
}

TEST_CASE("load_dataset runs the pipeline") {
    testsupport::TempDir dir("load");
    SynthSpec spec = variant(0, 3);
    spec.per_class = 2;
    const DatasetManifest m = generate_synthetic_family(spec, dir.path());
    const Dataset ds = load_dataset(m, 35);
    CHECK(ds.size() == 20);
    CHECK(ds.classes[4][1].id == "4/4_0001.pgm");
    CHECK(ds.classes[4][1].image == preprocess_pipeline(synthesize_glyph(spec, 4, 1), 35));
}

TEST_CASE("zero deformation gives identical images per class") {
    SynthSpec s;
    for (std::uint32_t set : {0u, 1u, 5u}) {
        s.glyph_set = set;
        for (int d = 0; d < kDigitClasses; ++d) {
            const GrayImage first = synthesize_glyph(s, d, 0);
            for (std::size_t i = 1; i < 4; ++i) CHECK(synthesize_glyph(s, d, i) == first);
        }
    }
}

TEST_CASE("glyphs are distinct across digits and sets") {
    for (std::uint32_t set : {0u, 1u, 2u}) {
        SynthSpec s;
        s.glyph_set = set;
        for (int d = 0; d < kDigitClasses; ++d)
            for (int e = d + 1; e < kDigitClasses; ++e) CHECK_FALSE(synthesize_glyph(s, d, 0) == synthesize_glyph(s, e, 0));
    }
    SynthSpec a, b;
    b.glyph_set = 1;
    for (int d = 0; d < kDigitClasses; ++d) CHECK_FALSE(synthesize_glyph(a, d, 0) == synthesize_glyph(b, d, 0));
}

TEST_CASE("synthetic generation is deterministic on disk") {
    testsupport::TempDir a("syna"), b("synb");
    SynthSpec spec = variant(1, 9);
    spec.per_class = 3;
    const auto ma = generate_synthetic_family(spec, a.path());
    const auto mb = generate_synthetic_family(spec, b.path());
    for (int d = 0; d < kDigitClasses; ++d)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(read_file(ma.files[d][i]) == read_file(mb.files[d][i]));
}

TEST_CASE("white_on_black flips polarity only") {
    SynthSpec s = variant(0, 4);
    SynthSpec w = s;
    w.white_on_black = true;
    const GrayImage a = synthesize_glyph(s, 3, 2), b = synthesize_glyph(w, 3, 2);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) CHECK(a.pixels[i] + b.pixels[i] == 255);
    CHECK(preprocess_pipeline(a) == preprocess_pipeline(b));
}

TEST_CASE("within-family overlap exceeds cross-family overlap") {
    double within = 0, cross = 0;
    for (std::size_t k = 0; k < 100; ++k) {
        const int d = static_cast<int>(k % 10);
        const auto a0 = preprocess_pipeline(synthesize_glyph(variant(0, 1), d, k), 35);
        const auto a1 = preprocess_pipeline(synthesize_glyph(variant(0, 2), d, k), 35);
        const auto b1 = preprocess_pipeline(synthesize_glyph(variant(1, 2), d, k), 35);
        within += overlap(a0, a1);
        cross += overlap(a0, b1);
    }
    CHECK(within > cross);
}

TEST_CASE("synth spec validation") {
    SynthSpec s;
    s.per_class = 0;
    CHECK_THROWS_AS(validate_synth_spec(s), Error);
    s = {};
    s.rotation_deg = -1;
    CHECK_THROWS_AS(validate_synth_spec(s), Error);
    s = {};
    s.shear = -0.1;
    CHECK_THROWS_AS(validate_synth_spec(s), Error);
    s = {};
    s.jitter_px = -2;
    CHECK_THROWS_AS(validate_synth_spec(s), Error);
    s = {};
    s.thickness_delta = -0.5;
    CHECK_THROWS_AS(validate_synth_spec(s), Error);
    validate_synth_spec(SynthSpec{});
}

} // TEST_SUITE
