#include "numaff/error.hpp"

namespace numaff {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::non_finite: return "non_finite";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::io: return "io";
    case Errc::decode: return "decode";
    case Errc::bad_magic: return "bad_magic";
    case Errc::bad_version: return "bad_version";
    case Errc::truncated: return "truncated";
    case Errc::ragged_rows: return "ragged_rows";
    case Errc::non_numeric: return "non_numeric";
    case Errc::asymmetric: return "asymmetric";
    case Errc::out_of_range: return "out_of_range";
    case Errc::duplicate_name: return "duplicate_name";
    case Errc::missing_class: return "missing_class";
    case Errc::empty_class: return "empty_class";
    case Errc::unreadable_file: return "unreadable_file";
    case Errc::divergence: return "divergence";
    case Errc::name_mismatch: return "name_mismatch";
    }
    return "unknown";
}

} // namespace numaff
