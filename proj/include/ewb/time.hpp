#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace ewb {

/// UTC instants are carried as seconds since the Unix epoch.
using UtcSeconds = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerHour = 3600;

namespace detail {

// Civil-calendar <-> day-count conversions (proleptic Gregorian, UTC).
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
    int year;
    unsigned month;
    unsigned day;
};

constexpr CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

}  // namespace detail

struct UtcParts {
    int year;
    unsigned month;
    unsigned day;
    unsigned hour;
    unsigned minute;
    unsigned second;
};

inline UtcParts utc_parts(UtcSeconds t) {
    std::int64_t days = t / kSecondsPerDay;
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        days -= 1;
    }
    const auto cd = detail::civil_from_days(days);
    return {cd.year, cd.month, cd.day,
            static_cast<unsigned>(rem / 3600),
            static_cast<unsigned>((rem / 60) % 60),
            static_cast<unsigned>(rem % 60)};
}

inline UtcSeconds utc_from_parts(int year, unsigned month, unsigned day,
                                 unsigned hour = 0, unsigned minute = 0,
                                 unsigned second = 0) {
    return detail::days_from_civil(year, month, day) * kSecondsPerDay +
           hour * 3600 + minute * 60 + second;
}

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (seconds optional, trailing Z optional).
inline UtcSeconds parse_iso8601(const std::string& s) {
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, se = 0;
    int n = 0;
    int got = std::sscanf(s.c_str(), "%d-%2u-%2uT%2u:%2u:%2u%n", &y, &mo, &d,
                          &h, &mi, &se, &n);
    if (got < 5) {
        got = std::sscanf(s.c_str(), "%d-%2u-%2u%n", &y, &mo, &d, &n);
        if (got < 3) throw std::runtime_error("bad ISO-8601 timestamp: " + s);
        h = mi = se = 0;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || se > 60)
        throw std::runtime_error("bad ISO-8601 timestamp: " + s);
    return utc_from_parts(y, mo, d, h, mi, se);
}

inline std::string format_iso8601(UtcSeconds t) {
    const auto p = utc_parts(t);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02uZ", p.year,
                  p.month, p.day, p.hour, p.minute, p.second);
    return buf;
}

/// Filesystem-safe timestamp ("20210625T000000Z"), used for init-time dirs.
inline std::string format_compact(UtcSeconds t) {
    const auto p = utc_parts(t);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d%02u%02uT%02u%02u%02uZ", p.year,
                  p.month, p.day, p.hour, p.minute, p.second);
    return buf;
}

/// UTC calendar day index (days since epoch); the "day" used by detectors.
inline std::int64_t utc_day_index(UtcSeconds t) {
    std::int64_t d = t / kSecondsPerDay;
    if (t % kSecondsPerDay < 0) d -= 1;
    return d;
}

/// Day-of-year in a 365-day calendar, 1-based. Feb 29 folds onto Feb 28.
inline int day_of_year_365(UtcSeconds t) {
    const auto p = utc_parts(t);
    static constexpr int cum[12] = {0,   31,  59,  90,  120, 151,
                                    181, 212, 243, 273, 304, 334};
    unsigned day = p.day;
    if (p.month == 2 && day == 29) day = 28;
    return cum[p.month - 1] + static_cast<int>(day);
}

/// Hour-of-day bucket on the 6-hourly synoptic cadence (0,6,12,18 -> 0..3).
inline int synoptic_hour_index(UtcSeconds t) {
    std::int64_t rem = t % kSecondsPerDay;
    if (rem < 0) rem += kSecondsPerDay;
    return static_cast<int>(rem / (6 * kSecondsPerHour));
}

/// Circular distance between two days-of-year in a 365-day calendar.
inline int doy_distance(int a, int b) {
    int d = a - b;
    if (d < 0) d = -d;
    return d <= 365 - d ? d : 365 - d;
}

}  // namespace ewb
