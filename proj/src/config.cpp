#include "numaff/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "numaff/error.hpp"
#include "numaff/image.hpp"

namespace numaff {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* want) {
    throw Error(Errc::invalid_argument,
                "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + want);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    int base = 10;
    if (v.starts_with("0x") || v.starts_with("0X")) {
        v.remove_prefix(2);
        base = 16;
    }
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
    return out;
}

double to_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    errno = 0;
    const double out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) bad_value(key, v, "a number");
    return out;
}

} // namespace

Precision parse_precision(std::string_view s) {
    if (s == "f32" || s == "float" || s == "32") return Precision::f32;
    if (s == "f64" || s == "double" || s == "64") return Precision::f64;
    throw Error(Errc::invalid_argument, "unknown precision '" + std::string(s) + "' (expected f32 or f64)");
}

const char* precision_name(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t line_no = 0, start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::decode, "config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(Errc::decode, "config line " + std::to_string(line_no) + ": empty key");
        out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    auto count = [&] { return static_cast<std::size_t>(to_u64(key, value)); };
    if (key == "preset") c.preset = parse_preset(value);
    else if (key == "epochs_max") c.train.epochs_max = count();
    else if (key == "batch_size") c.train.batch_size = count();
    else if (key == "pairs_per_epoch") c.train.pairs_per_epoch = count();
    else if (key == "accuracy_lo") c.train.accuracy_lo = to_double(key, value);
    else if (key == "accuracy_hi") c.train.accuracy_hi = to_double(key, value);
    else if (key == "target_accuracy_window") {
        const auto comma = value.find(',');
        if (comma == std::string_view::npos) bad_value(key, value, "a 'lo,hi' pair");
        c.train.accuracy_lo = to_double(key, trim(value.substr(0, comma)));
        c.train.accuracy_hi = to_double(key, trim(value.substr(comma + 1)));
    } else if (key == "lr") c.train.lr = to_double(key, value);
    else if (key == "seed") c.train.seed = to_u64(key, value);
    else if (key == "precision") c.train.precision = parse_precision(value);
    else if (key == "samples_per_digit" || key == "N") c.sampling.samples_per_digit = count();
    else if (key == "master_seed") c.sampling.master_seed = to_u64(key, value);
    else throw Error(Errc::invalid_argument, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
    for (const auto& [k, v] : parse_key_values(text)) apply_setting(base, k, v);
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    const std::string text = read_file(path);
    try {
        return parse_config(text, std::move(base));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string config_text(const RunConfig& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "preset = %s\nepochs_max = %zu\nbatch_size = %zu\npairs_per_epoch = %zu\n"
                  "accuracy_lo = %.17g\naccuracy_hi = %.17g\nlr = %.17g\nseed = %llu\nprecision = %s\n"
                  "samples_per_digit = %zu\nmaster_seed = %llu\n",
                  std::string(preset_name(c.preset)).c_str(), c.train.epochs_max, c.train.batch_size, c.train.pairs_per_epoch,
                  c.train.accuracy_lo, c.train.accuracy_hi, c.train.lr,
                  static_cast<unsigned long long>(c.train.seed), precision_name(c.train.precision),
                  c.sampling.samples_per_digit, static_cast<unsigned long long>(c.sampling.master_seed));
    return buf;
}

} // namespace numaff
