#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "error.hpp"

namespace segeval {

enum class Timepoint : std::uint8_t { baseline, year1 };
enum class Split : std::uint8_t { train, validation, test };
enum class Sex : std::uint8_t { male, female };

inline std::string_view to_string(Timepoint t) { return t == Timepoint::baseline ? "baseline" : "year1"; }
inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "?";
}
inline std::string_view to_string(Sex s) { return s == Sex::male ? "male" : "female"; }

inline Timepoint parse_timepoint(std::string_view s) {
    if (s == "baseline") return Timepoint::baseline;
    if (s == "year1") return Timepoint::year1;
    throw ValidationError("unknown timepoint '" + std::string(s) + "' (expected baseline or year1)");
}
inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split '" + std::string(s) + "' (expected train, validation or test)");
}
inline Sex parse_sex(std::string_view s) {
    if (s == "male" || s == "M" || s == "m") return Sex::male;
    if (s == "female" || s == "F" || s == "f") return Sex::female;
    throw ValidationError("unknown sex '" + std::string(s) + "'");
}

} // namespace segeval
