#pragma once

#include <stdexcept>
#include <string>

namespace numaff {

/// Machine-checkable failure category carried by every numaff::Error.
enum class Errc {
    shape_mismatch,
    non_finite,
    invalid_argument,
    io,
    decode,
    // checkpoint
    bad_magic,
    bad_version,
    truncated,
    // matrix csv
    ragged_rows,
    non_numeric,
    asymmetric,
    out_of_range,
    duplicate_name,
    // dataset layout
    missing_class,
    empty_class,
    unreadable_file,
    // training
    divergence,
    name_mismatch,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace numaff
