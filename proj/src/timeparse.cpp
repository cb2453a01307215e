#include "dq/timeparse.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace dq::timeparse {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> d = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap(y)) return 29;
    return d[m - 1];
}

// Days since 1970-01-01 (proleptic Gregorian, civil-from-days style).
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    int64_t era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(z - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

std::optional<int64_t> make_epoch(int y, int mo, int d, int h, int mi, int s) {
    if (y < 1 || y > 9999 || mo < 1 || mo > 12) return std::nullopt;
    if (d < 1 || d > days_in_month(y, mo)) return std::nullopt;
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::optional<int64_t> parse_one(std::string_view s, Format f) {
    switch (f) {
        case Format::IsoDate: {
            if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
            auto y = s.substr(0, 4), m = s.substr(5, 2), d = s.substr(8, 2);
            if (!all_digits(y) || !all_digits(m) || !all_digits(d)) return std::nullopt;
            return make_epoch(to_int(y), to_int(m), to_int(d), 0, 0, 0);
        }
        case Format::IsoDateTime: {
            if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
            if (s.size() != 19 || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
            auto date = parse_one(s.substr(0, 10), Format::IsoDate);
            if (!date) return std::nullopt;
            if (s[13] != ':' || s[16] != ':') return std::nullopt;
            auto hh = s.substr(11, 2), mm = s.substr(14, 2), ss = s.substr(17, 2);
            if (!all_digits(hh) || !all_digits(mm) || !all_digits(ss)) return std::nullopt;
            int h = to_int(hh), mi = to_int(mm), sec = to_int(ss);
            if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
            return *date + h * 3600 + mi * 60 + sec;
        }
        case Format::MonthYear: {
            if (s.size() != 7 || s[2] != '/') return std::nullopt;
            auto m = s.substr(0, 2), y = s.substr(3, 4);
            if (!all_digits(m) || !all_digits(y)) return std::nullopt;
            return make_epoch(to_int(y), to_int(m), 1, 0, 0, 0);
        }
        case Format::DayMonthYear: {
            if (s.size() != 10 || s[2] != '/' || s[5] != '/') return std::nullopt;
            auto d = s.substr(0, 2), m = s.substr(3, 2), y = s.substr(6, 4);
            if (!all_digits(d) || !all_digits(m) || !all_digits(y)) return std::nullopt;
            return make_epoch(to_int(y), to_int(m), to_int(d), 0, 0, 0);
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<Format> default_formats() {
    return {Format::IsoDate, Format::IsoDateTime, Format::MonthYear, Format::DayMonthYear};
}

std::optional<int64_t> parse(std::string_view s, const std::vector<Format>& formats) {
    for (Format f : formats) {
        if (auto v = parse_one(s, f)) return v;
    }
    return std::nullopt;
}

std::optional<int64_t> parse_iso(std::string_view s) {
    if (auto v = parse_one(s, Format::IsoDateTime)) return v;
    return parse_one(s, Format::IsoDate);
}

std::string format_iso(int64_t epoch_seconds) {
    int64_t days = epoch_seconds / 86400;
    int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::optional<Format> format_from_name(std::string_view name) {
    if (name == "iso_date") return Format::IsoDate;
    if (name == "iso_datetime") return Format::IsoDateTime;
    if (name == "month_year") return Format::MonthYear;
    if (name == "day_month_year") return Format::DayMonthYear;
    return std::nullopt;
}

}  // namespace dq::timeparse
