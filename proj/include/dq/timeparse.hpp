#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dq::timeparse {

/// Named date/time formats, tried in list order; first match wins.
enum class Format {
    IsoDate,       // YYYY-MM-DD
    IsoDateTime,   // YYYY-MM-DDTHH:MM:SS with optional trailing Z
    MonthYear,     // MM/YYYY
    DayMonthYear,  // DD/MM/YYYY
};

std::vector<Format> default_formats();

/// Parses the full string as UTC epoch seconds; std::nullopt when no format
/// consumes the entire input or a field is out of range.
std::optional<int64_t> parse(std::string_view s, const std::vector<Format>& formats);

std::optional<int64_t> parse_iso(std::string_view s);

/// YYYY-MM-DDTHH:MM:SSZ
std::string format_iso(int64_t epoch_seconds);

std::optional<Format> format_from_name(std::string_view name);

}  // namespace dq::timeparse
