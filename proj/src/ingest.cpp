#include "numaff/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "json.hpp"

#include "numaff/error.hpp"
#include "numaff/preprocess.hpp"
#include "numaff/rng.hpp"

namespace numaff {

namespace fs = std::filesystem;

void require_all_classes(const Dataset& ds) {
    for (int d = 0; d < kDigitClasses; ++d)
        if (ds.classes[d].empty())
            throw Error(Errc::empty_class, "dataset '" + ds.name + "' has no images for digit " + std::to_string(d));
}

std::array<std::size_t, kDigitClasses> DatasetManifest::counts() const {
    std::array<std::size_t, kDigitClasses> c{};
    for (int d = 0; d < kDigitClasses; ++d) c[d] = files[d].size();
    return c;
}

std::string dataset_name_from_root(const fs::path& root) {
    fs::path p = root;
    if (!p.has_filename()) p = p.parent_path(); // trailing slash
    return p.filename().string();
}

namespace {

bool is_image_file(const fs::directory_entry& e) {
    if (!e.is_regular_file()) return false;
    const std::string name = e.path().filename().string();
    if (name.empty() || name.front() == '.') return false;
    const std::string ext = e.path().extension().string();
    return ext == ".pgm" || ext == ".ppm";
}

} // namespace

DatasetManifest scan_dataset(const fs::path& root, std::string name) {
    if (!fs::is_directory(root)) throw Error(Errc::io, "dataset root is not a directory: " + root.string());
    DatasetManifest m{std::move(name), root, {}};
    for (int d = 0; d < kDigitClasses; ++d) {
        const fs::path dir = root / std::to_string(d);
        if (!fs::is_directory(dir))
            throw Error(Errc::missing_class, "dataset '" + m.name + "' is missing class directory " + dir.string());
        auto& list = m.files[d];
        for (const auto& e : fs::directory_iterator(dir))
            if (is_image_file(e)) list.push_back(e.path());
        if (list.empty())
            throw Error(Errc::empty_class, "dataset '" + m.name + "' has no images in " + dir.string());
        std::sort(list.begin(), list.end());
        for (const auto& f : list) {
            std::ifstream probe(f, std::ios::binary);
            if (!probe || probe.peek() == std::ifstream::traits_type::eof())
                throw Error(Errc::unreadable_file, "cannot read " + f.string());
        }
    }
    return m;
}

std::string manifest_json(const DatasetManifest& m) {
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["root"] = m.root.generic_string();
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    for (int d = 0; d < kDigitClasses; ++d) {
        nlohmann::ordered_json files = nlohmann::ordered_json::array();
        for (const auto& f : m.files[d]) files.push_back(f.generic_string());
        classes[std::to_string(d)] = {{"count", m.files[d].size()}, {"files", files}};
    }
    j["classes"] = classes;
    return j.dump(2) + "\n";
}

DatasetManifest parse_manifest_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        DatasetManifest m;
        m.name = j.at("name").get<std::string>();
        m.root = j.at("root").get<std::string>();
        for (int d = 0; d < kDigitClasses; ++d) {
            const auto& c = j.at("classes").at(std::to_string(d));
            for (const auto& f : c.at("files")) m.files[d].emplace_back(f.get<std::string>());
            if (c.at("count").get<std::size_t>() != m.files[d].size())
                throw Error(Errc::decode, "manifest count for digit " + std::to_string(d) + " disagrees with its file list");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::decode, std::string("manifest json: ") + e.what());
    }
}

Dataset load_dataset(const DatasetManifest& manifest, std::size_t image_size) {
    Dataset ds;
    ds.name = manifest.name;
    for (int d = 0; d < kDigitClasses; ++d) {
        for (const auto& f : manifest.files[d]) {
            ds.classes[d].push_back(
                {std::to_string(d) + "/" + f.filename().string(), preprocess_file(f, image_size)});
        }
    }
    require_all_classes(ds);
    return ds;
}

// --- glyphs ------------------------------------------------------------------

namespace {

struct Point {
    double x, y;
};
using Polyline = std::vector<Point>;
using Glyph = std::vector<Polyline>;

// Points on an elliptical arc; angles in degrees, 0 = +x, 90 = down (+y).
Polyline arc(double cx, double cy, double rx, double ry, double a0, double a1, int steps = 24) {
    Polyline p;
    for (int i = 0; i <= steps; ++i) {
        const double a = (a0 + (a1 - a0) * i / steps) * std::numbers::pi / 180.0;
        p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return p;
}

Polyline join(Polyline a, const Polyline& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

// Western Arabic numerals.
Glyph latin_glyph(int digit) {
    switch (digit) {
    case 0: return {arc(0.5, 0.5, 0.25, 0.36, 0, 360)};
    case 1: return {{{0.38, 0.24}, {0.52, 0.12}, {0.52, 0.88}}};
    case 2: return {join(arc(0.5, 0.34, 0.21, 0.2, 190, 380), {{0.27, 0.87}, {0.76, 0.87}})};
    case 3: return {arc(0.48, 0.31, 0.2, 0.19, -160, 90), arc(0.48, 0.69, 0.22, 0.19, -90, 160)};
    case 4: return {{{0.64, 0.88}, {0.64, 0.12}, {0.24, 0.64}, {0.8, 0.64}}};
    case 5: return {join({{0.72, 0.13}, {0.35, 0.13}, {0.31, 0.46}}, arc(0.5, 0.65, 0.22, 0.22, -125, 150))};
    case 6: return {join({{0.68, 0.13}, {0.46, 0.22}, {0.32, 0.44}}, arc(0.5, 0.67, 0.2, 0.21, 180, 540))};
    case 7: return {{{0.24, 0.13}, {0.76, 0.13}, {0.42, 0.88}}};
    case 8: return {arc(0.5, 0.3, 0.17, 0.17, 0, 360), arc(0.5, 0.68, 0.21, 0.2, 0, 360)};
    case 9: return {arc(0.5, 0.33, 0.2, 0.2, 0, 360), {{0.7, 0.34}, {0.62, 0.88}}};
    }
    return {};
}

// An invented angular script: every numeral has a different topology from
// its latin counterpart.
Glyph angular_glyph(int digit) {
    switch (digit) {
    case 0: return {{{0.5, 0.16}, {0.82, 0.5}, {0.5, 0.84}, {0.18, 0.5}, {0.5, 0.16}}};
    case 1: return {{{0.18, 0.3}, {0.8, 0.3}, {0.8, 0.7}, {0.5, 0.86}}};
    case 2: return {{{0.2, 0.18}, {0.8, 0.38}, {0.2, 0.6}, {0.8, 0.82}}};
    case 3: return {{{0.76, 0.15}, {0.25, 0.15}, {0.25, 0.85}, {0.76, 0.85}}, {{0.25, 0.5}, {0.66, 0.5}}};
    case 4: return {{{0.5, 0.14}, {0.84, 0.84}, {0.16, 0.84}, {0.5, 0.14}}};
    case 5: return {{{0.5, 0.14}, {0.5, 0.86}}, {{0.14, 0.5}, {0.86, 0.5}}};
    case 6: return {join(arc(0.5, 0.5, 0.32, 0.32, 0, 270), {{0.5, 0.5}})};
    case 7: return {{{0.18, 0.15}, {0.5, 0.86}, {0.82, 0.15}}};
    case 8: return {{{0.2, 0.2}, {0.8, 0.8}}, {{0.8, 0.2}, {0.2, 0.8}}};
    case 9: return {join(join({{0.26, 0.14}, {0.26, 0.62}}, arc(0.5, 0.62, 0.24, 0.22, 180, 0)), {{0.74, 0.14}})};
    }
    return {};
}

Glyph procedural_glyph(std::uint32_t set, int digit) {
    Rng rng(splitmix64(0x676c797068ULL ^ (std::uint64_t{set} << 8) ^ static_cast<std::uint64_t>(digit)));
    Glyph g;
    const std::size_t strokes = 1 + rng.index(2);
    for (std::size_t s = 0; s < strokes; ++s) {
        Polyline p;
        const std::size_t points = 3 + rng.index(3);
        for (std::size_t k = 0; k < points; ++k) p.push_back({rng.uniform(0.15, 0.85), rng.uniform(0.12, 0.88)});
        g.push_back(std::move(p));
    }
    return g;
}

Glyph base_glyph(std::uint32_t set, int digit) {
    if (set == 0) return latin_glyph(digit);
    if (set == 1) return angular_glyph(digit);
    return procedural_glyph(set, digit);
}

double segment_distance(Point p, Point a, Point b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace

void validate_synth_spec(const SynthSpec& spec) {
    if (spec.per_class < 1) throw Error(Errc::invalid_argument, "synth: per_class must be >= 1");
    if (spec.image_size < 4) throw Error(Errc::invalid_argument, "synth: image_size must be >= 4");
    if (spec.rotation_deg < 0 || spec.shear < 0 || spec.jitter_px < 0 || spec.thickness_delta < 0)
        throw Error(Errc::invalid_argument, "synth: deformation magnitudes must be non-negative");
    if (!(spec.base_thickness > 0)) throw Error(Errc::invalid_argument, "synth: base_thickness must be positive");
}

GrayImage synthesize_glyph(const SynthSpec& spec, int digit, std::size_t index) {
    validate_synth_spec(spec);
    if (digit < 0 || digit >= kDigitClasses) throw Error(Errc::invalid_argument, "synth: digit outside 0..9");

    Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(digit) * 1000003ULL + index)));
    const double angle = rng.uniform(-spec.rotation_deg, spec.rotation_deg) * std::numbers::pi / 180.0;
    const double shear = rng.uniform(-spec.shear, spec.shear);
    const double dx = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double dy = rng.uniform(-spec.jitter_px, spec.jitter_px);
    const double thickness =
        std::max(0.5, spec.base_thickness + rng.uniform(-spec.thickness_delta, spec.thickness_delta));

    const double size = static_cast<double>(spec.image_size);
    const double scale = 0.8 * size;
    const double ca = std::cos(angle), sa = std::sin(angle);
    auto to_pixels = [&](Point g) {
        const double x = g.x - 0.5 + shear * (g.y - 0.5), y = g.y - 0.5;
        return Point{size / 2 + scale * (ca * x - sa * y) + dx, size / 2 + scale * (sa * x + ca * y) + dy};
    };

    std::vector<std::pair<Point, Point>> segments;
    for (const auto& line : base_glyph(spec.glyph_set, digit)) {
        for (std::size_t i = 0; i + 1 < line.size(); ++i)
            segments.emplace_back(to_pixels(line[i]), to_pixels(line[i + 1]));
        if (line.size() == 1) segments.emplace_back(to_pixels(line[0]), to_pixels(line[0]));
    }

    GrayImage img(spec.image_size, spec.image_size);
    for (std::size_t y = 0; y < spec.image_size; ++y) {
        for (std::size_t x = 0; x < spec.image_size; ++x) {
            const Point c{x + 0.5, y + 0.5};
            double d = std::numeric_limits<double>::infinity();
            for (const auto& [a, b] : segments) d = std::min(d, segment_distance(c, a, b));
            // One pixel of linear falloff at the stroke edge.
            const double ink = std::clamp(thickness / 2 + 0.5 - d, 0.0, 1.0);
            const auto level = static_cast<std::uint8_t>(std::lround(255.0 * ink));
            img.at(x, y) = spec.white_on_black ? level : static_cast<std::uint8_t>(255 - level);
        }
    }
    return img;
}

DatasetManifest generate_synthetic_family(const SynthSpec& spec, const fs::path& root) {
    validate_synth_spec(spec);
    for (int d = 0; d < kDigitClasses; ++d)
        for (std::size_t k = 0; k < spec.per_class; ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "%d_%04zu.pgm", d, k);
            write_pgm(root / std::to_string(d) / name, synthesize_glyph(spec, d, k));
        }
    return scan_dataset(root, spec.family_id);
}

} // namespace numaff
