#include "aqmeis/time.hpp"

#include <cstdio>
#include <ctime>

namespace aqmeis {

using namespace std::chrono;

namespace {

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<Date> checked_date(int y, int m, int d) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return local_days{ymd};
}

std::optional<TimePoint> checked_time(int y, int mo, int d, int h, int mi) {
  auto date = checked_date(y, mo, d);
  if (!date || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  return start_of(*date) + hours{h} + minutes{mi};
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = digits(s, 0, 4), m = digits(s, 5, 2), d = digits(s, 8, 2);
  if (!y || !m || !d) return std::nullopt;
  return checked_date(*y, *m, *d);
}

std::optional<TimePoint> parse_timestamp(std::string_view s) {
  if (s.size() == 19) {
    if (s[16] != ':' || s.substr(17) != "00") return std::nullopt;
    s = s.substr(0, 16);
  }
  if (s.size() != 16 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  auto h = digits(s, 11, 2), mi = digits(s, 14, 2);
  if (!date || !h || !mi || *h > 23 || *mi > 59) return std::nullopt;
  return start_of(*date) + hours{*h} + minutes{*mi};
}

std::optional<TimePoint> parse_compact_timestamp(std::string_view s) {
  if (s.size() != 12) return std::nullopt;
  auto y = digits(s, 0, 4), mo = digits(s, 4, 2), d = digits(s, 6, 2);
  auto h = digits(s, 8, 2), mi = digits(s, 10, 2);
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  return checked_time(*y, *mo, *d, *h, *mi);
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(TimePoint t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T%02d:%02d", hour_of_day(t), minute_of_hour(t));
  return format_date(date_of(t)) + buf;
}

std::string format_compact_timestamp(TimePoint t) {
  year_month_day ymd{date_of(t)};
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u%02d%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                hour_of_day(t), minute_of_hour(t));
  return buf;
}

Date make_date(int y, unsigned m, unsigned d) {
  return local_days{year{y} / month{m} / day{d}};
}

TimePoint make_time(int y, unsigned m, unsigned d, int hour, int minute) {
  return start_of(make_date(y, m, d)) + hours{hour} + minutes{minute};
}

Date today_local() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  localtime_r(&now, &tm);
  return make_date(tm.tm_year + 1900, static_cast<unsigned>(tm.tm_mon + 1),
                   static_cast<unsigned>(tm.tm_mday));
}

}  // namespace aqmeis
