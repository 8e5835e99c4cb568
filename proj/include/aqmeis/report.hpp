#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqmeis/store.hpp"

namespace aqmeis::report {

using store::Interval;
using store::ValidityStatus;

enum class Category { Daily, Weekly, Monthly, Custom };

std::string_view category_name(Category c);  // "daily", ...
std::optional<Category> parse_category(std::string_view name);

struct Period {
  Date from{};
  Date to{};
  friend bool operator==(const Period&, const Period&) = default;
};

/// First and last grid slot covered by a whole-day period.
TimePoint period_begin(const Period& p);
TimePoint period_end(const Period& p, Interval interval);

/// Weeks start on Monday; every default period ends today.
Period default_period(Category category, Date today);

struct FieldStats {
  double average = 0;
  double minimum = 0;
  TimePoint min_time{};
  long min_count = 0;
  double maximum = 0;
  TimePoint max_time{};
  double sum = 0;
  long count = 0;
  double percent = 0;  // 100 * count / expected slots in the period
};

struct Sample {
  TimePoint timestamp{};
  double value = 0;
  ValidityStatus status = ValidityStatus::Missing;
};

/// Statistics over the Valid samples only; nullopt ("NO DATA") when there
/// are none. Extremum times are the earliest occurrence.
std::optional<FieldStats> field_stats(std::span<const Sample> samples, Interval interval,
                                      const Period& period);

struct DisplayCell {
  enum class Kind { Number, Offscan, NoData };
  Kind kind = Kind::NoData;
  double value = 0;

  static DisplayCell from(const store::Reading& r);
  std::string render() const;  // number, "Offscan" or "NO DATA"
  friend bool operator==(const DisplayCell&, const DisplayCell&) = default;
};

inline constexpr std::string_view kOffscanMarker = "Offscan";
inline constexpr std::string_view kNoDataMarker = "NO DATA";

struct ReportRequest {
  std::string station_id;
  std::vector<int> channels;
  Interval interval = Interval::SixtyMin;
  Period period{};
  Category category = Category::Custom;
};

struct ReportColumn {
  int index = 0;
  std::string name;
  std::string unit;
};

struct ReportRow {
  TimePoint timestamp{};
  std::vector<DisplayCell> cells;  // one per column
};

struct ReportTable {
  ReportRequest request;
  std::vector<ReportColumn> columns;
  std::vector<ReportRow> rows;
  std::vector<std::optional<FieldStats>> stats;  // one per column
  std::size_t total_rows = 0;
  long expected_slots = 0;
};

ReportTable build_report(const store::MeasurementStore& store, const ReportRequest& request);

inline constexpr int kPageSize = 25;

struct Page {
  std::span<const ReportRow> rows;
  int page = 1;
  int total_pages = 1;
  std::size_t total_rows = 0;
};

/// Pages past the end clamp to the last page.
Page paginate(const ReportTable& table, int page);

/// "100 measurements were found"
std::string found_banner(std::size_t total_rows);
/// "page 1 from 12"
std::string page_label(const Page& page);

// CSV dialect: UTF-8 with BOM, comma separator, `"` quoting, CRLF rows.
std::string export_csv(const ReportTable& table);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Every channel present in the stream over the period.
std::string export_stream_csv(const store::MeasurementStore& store, const store::StreamKey& key,
                              const Period& period);
/// Reads rows back from export_csv output. Offscan cells come back without
/// their original value. Returns the number of records written.
std::size_t import_stream_csv(store::MeasurementStore& store, const store::StreamKey& key,
                              std::string_view csv);

}  // namespace aqmeis::report
