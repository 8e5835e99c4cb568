#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace aqmeis {

// All timestamps are civil times in the single configured zone. They never
// leave local_time, so no DST gap or fold is ever synthesized.
using TimePoint = std::chrono::local_time<std::chrono::minutes>;
using Date = std::chrono::local_days;

inline Date date_of(TimePoint t) { return std::chrono::floor<std::chrono::days>(t); }
inline TimePoint start_of(Date d) { return TimePoint{d.time_since_epoch()}; }
inline int minute_of_hour(TimePoint t) {
  auto since_day = t - start_of(date_of(t));
  return static_cast<int>(since_day.count() % 60);
}
inline int hour_of_day(TimePoint t) {
  auto since_day = t - start_of(date_of(t));
  return static_cast<int>(since_day.count() / 60);
}

/// Accepts `YYYY-MM-DDTHH:MM`, optionally followed by `:00`. A space may
/// replace the `T`. Returns nullopt for anything else, including impossible
/// calendar dates.
std::optional<TimePoint> parse_timestamp(std::string_view text);
/// `YYYY-MM-DD`.
std::optional<Date> parse_date(std::string_view text);
/// `YYYYMMDDHHMM`, used in image filenames.
std::optional<TimePoint> parse_compact_timestamp(std::string_view text);

std::string format_timestamp(TimePoint t);          // 2023-05-10T10:05
std::string format_date(Date d);                    // 2023-05-10
std::string format_compact_timestamp(TimePoint t);  // 202305101005

Date make_date(int y, unsigned m, unsigned d);
TimePoint make_time(int y, unsigned m, unsigned d, int hour, int minute);

/// Today's date in the process-local zone.
Date today_local();

}  // namespace aqmeis
