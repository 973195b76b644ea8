#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "ammlens/error.hpp"

namespace ammlens {

// UTC epoch seconds.
using Timestamp = std::int64_t;
// Days since 1970-01-01 (UTC).
using DayIndex = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;

inline constexpr DayIndex day_of(Timestamp ts) noexcept {
    // floor division so pre-epoch timestamps land on the right day
    return ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
}

inline constexpr Timestamp day_start(DayIndex d) noexcept { return d * kSecondsPerDay; }

inline std::string format_date(DayIndex d) {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{d}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

// Parses YYYY-MM-DD.
inline DayIndex parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string s(text);
    if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
        throw ValidationError("bad date '" + s + "', expected YYYY-MM-DD");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw ValidationError("invalid calendar date '" + s + "'");
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

// Half-open [start, end).
struct TimeWindow {
    std::string label;
    Timestamp start = 0;
    Timestamp end = 0;

    bool contains(Timestamp t) const noexcept { return t >= start && t < end; }
    DayIndex first_day() const noexcept { return day_of(start); }
    // One past the last day touched by the window.
    DayIndex end_day() const noexcept { return day_of(end - 1) + 1; }
    std::int64_t day_count() const noexcept { return end_day() - first_day(); }

    void validate() const {
        if (!(start < end))
            throw ValidationError("time window '" + label + "' must satisfy start < end");
    }
};

inline TimeWindow make_window(std::string label, Timestamp start, Timestamp end) {
    TimeWindow w{std::move(label), start, end};
    w.validate();
    return w;
}

// "LABEL:YYYY-MM-DD:YYYY-MM-DD" (end date exclusive).
inline TimeWindow parse_window(std::string_view text) {
    const auto a = text.find(':');
    const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos || a == 0)
        throw ValidationError("bad window '" + std::string(text) +
                              "', expected LABEL:YYYY-MM-DD:YYYY-MM-DD");
    return make_window(std::string(text.substr(0, a)),
                       day_start(parse_date(text.substr(a + 1, b - a - 1))),
                       day_start(parse_date(text.substr(b + 1))));
}

inline std::string format_window(const TimeWindow& w) {
    return w.label + ":" + format_date(day_of(w.start)) + ":" + format_date(day_of(w.end));
}

}  // namespace ammlens
