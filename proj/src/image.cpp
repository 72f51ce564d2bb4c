#include "numaff/image.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "numaff/error.hpp"

namespace numaff {

GrayImage::GrayImage(std::size_t w, std::size_t h, std::uint8_t fill)
    : width(w), height(h), pixels(w * h, fill) {}

GrayImage::GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
    if (pixels.size() != w * h)
        throw Error(Errc::shape_mismatch, "gray image pixel count " + std::to_string(pixels.size()) +
                                              " != " + std::to_string(w) + "x" + std::to_string(h));
}

BinaryImage::BinaryImage(std::size_t w, std::size_t h, std::uint8_t fill)
    : width(w), height(h), pixels(w * h, fill) {
    if (fill > 1) throw Error(Errc::invalid_argument, "binary image fill must be 0 or 1");
}

BinaryImage::BinaryImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
    if (pixels.size() != w * h)
        throw Error(Errc::shape_mismatch, "binary image pixel count " + std::to_string(pixels.size()) +
                                              " != " + std::to_string(w) + "x" + std::to_string(h));
    for (auto p : pixels)
        if (p > 1) throw Error(Errc::invalid_argument, "binary image pixel outside {0,1}");
}

std::size_t BinaryImage::foreground_count() const {
    std::size_t n = 0;
    for (auto p : pixels) n += p;
    return n;
}

namespace {

class PnmCursor {
public:
    explicit PnmCursor(std::string_view b) : bytes_(b) {}

    // Whitespace and '#' comments may separate header tokens.
    void skip_separators() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    std::size_t read_uint(const char* what) {
        skip_separators();
        std::size_t v = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (v > (1u << 30)) throw Error(Errc::decode, std::string("pnm: ") + what + " too large");
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw Error(Errc::decode, std::string("pnm: expected ") + what);
        return v;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw Error(Errc::decode, "pnm: missing whitespace before raster");
        ++pos_;
    }

    std::string_view take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw Error(Errc::decode, "pnm: raster truncated");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

RasterImage decode_pnm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(Errc::decode, "pnm: unsupported magic (expected P5 or P6)");
    RasterImage img;
    img.channels = bytes[1] == '5' ? 1 : 3;
    PnmCursor cur(bytes.substr(2));
    img.width = cur.read_uint("width");
    img.height = cur.read_uint("height");
    const std::size_t maxval = cur.read_uint("maxval");
    if (img.width == 0 || img.height == 0) throw Error(Errc::decode, "pnm: zero extent");
    if (maxval == 0 || maxval > 255) throw Error(Errc::decode, "pnm: maxval must be in 1..255");
    cur.single_whitespace();
    const auto raster = cur.take(img.width * img.height * img.channels);
    img.pixels.assign(raster.begin(), raster.end());
    if (maxval < 255) {
        for (auto& p : img.pixels) {
            if (p > maxval) throw Error(Errc::decode, "pnm: sample exceeds maxval");
            p = static_cast<std::uint8_t>((p * 255u + maxval / 2) / maxval);
        }
    }
    return img;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(Errc::io, "read failed: " + path.string());
    return ss.str();
}

RasterImage read_pnm(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    try {
        return decode_pnm(bytes);
    } catch (const Error& e) {
        throw Error(Errc::decode, path.string() + ": " + e.what());
    }
}

std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "write failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    write_file(path, encode_pgm(img));
}

GrayImage to_gray(const BinaryImage& img) {
    GrayImage g(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) g.pixels[i] = img.pixels[i] ? 255 : 0;
    return g;
}

} // namespace numaff
