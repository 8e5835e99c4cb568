#include "aqmeis/report.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

namespace aqmeis::report {

using namespace std::chrono;
using store::MeasurementRecord;

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Daily: return "daily";
    case Category::Weekly: return "weekly";
    case Category::Monthly: return "monthly";
    case Category::Custom: return "custom";
  }
  return "custom";
}

std::optional<Category> parse_category(std::string_view name) {
  for (Category c : {Category::Daily, Category::Weekly, Category::Monthly, Category::Custom})
    if (category_name(c) == name) return c;
  return std::nullopt;
}

TimePoint period_begin(const Period& p) { return start_of(p.from); }

TimePoint period_end(const Period& p, Interval interval) {
  return start_of(p.to + days{1}) - minutes{store::interval_minutes(interval)};
}

Period default_period(Category category, Date today) {
  switch (category) {
    case Category::Weekly: {
      // iso_encoding: Monday = 1 ... Sunday = 7
      const unsigned since_monday = weekday{today}.iso_encoding() - 1;
      return {today - days{since_monday}, today};
    }
    case Category::Monthly: {
      year_month_day ymd{today};
      return {local_days{ymd.year() / ymd.month() / day{1}}, today};
    }
    case Category::Daily:
    case Category::Custom:
      break;
  }
  return {today, today};
}

std::optional<FieldStats> field_stats(std::span<const Sample> samples, Interval interval,
                                      const Period& period) {
  FieldStats s;
  for (const Sample& x : samples) {
    if (x.status != ValidityStatus::Valid) continue;
    if (s.count == 0) {
      s.minimum = s.maximum = x.value;
      s.min_time = s.max_time = x.timestamp;
      s.min_count = 1;
    } else {
      if (x.value < s.minimum) {
        s.minimum = x.value;
        s.min_time = x.timestamp;
        s.min_count = 1;
      } else if (x.value == s.minimum) {
        ++s.min_count;
        s.min_time = std::min(s.min_time, x.timestamp);
      }
      if (x.value > s.maximum) {
        s.maximum = x.value;
        s.max_time = x.timestamp;
      } else if (x.value == s.maximum) {
        s.max_time = std::min(s.max_time, x.timestamp);
      }
    }
    s.sum += x.value;
    ++s.count;
  }
  if (s.count == 0) return std::nullopt;
  s.average = s.sum / static_cast<double>(s.count);
  // rounding can push the mean a hair outside [min, max]
  s.average = std::clamp(s.average, s.minimum, s.maximum);
  const long expected =
      store::expected_count(interval, period_begin(period), period_end(period, interval));
  s.percent = expected > 0 ? 100.0 * static_cast<double>(s.count) / static_cast<double>(expected) : 0.0;
  return s;
}

DisplayCell DisplayCell::from(const store::Reading& r) {
  switch (r.status) {
    case ValidityStatus::Valid: return {Kind::Number, r.value};
    case ValidityStatus::Offscan: return {Kind::Offscan, 0.0};
    case ValidityStatus::Missing: break;
  }
  return {Kind::NoData, 0.0};
}

std::string DisplayCell::render() const {
  switch (kind) {
    case Kind::Number: return store::format_value(value);
    case Kind::Offscan: return std::string(kOffscanMarker);
    case Kind::NoData: break;
  }
  return std::string(kNoDataMarker);
}

ReportTable build_report(const store::MeasurementStore& store, const ReportRequest& request) {
  if (request.channels.empty()) fail(ErrorCode::NoChannelsSelected, "select at least one field");
  if (!store.is_known(request.station_id)) fail(ErrorCode::UnknownStation, request.station_id);
  if (request.period.from > request.period.to)
    fail(ErrorCode::InvertedRange, "report period starts after it ends");
  for (int index : request.channels)
    if (index < 1 || index > store::kMaxChannels)
      fail(ErrorCode::BadChannelIndex, "channel " + std::to_string(index));

  const TimePoint from = period_begin(request.period);
  const TimePoint to = period_end(request.period, request.interval);
  auto records = store.query_range({request.station_id, request.interval}, from, to, request.channels);
  if (records.empty())
    fail(ErrorCode::NoDataForPeriod, "no measurements stored between " +
                                         format_date(request.period.from) + " and " +
                                         format_date(request.period.to));

  ReportTable table;
  table.request = request;
  for (int index : request.channels) {
    const auto* def = store.channels().find(request.station_id, index);
    table.columns.push_back({index, def ? def->name : "value" + std::to_string(index),
                             def ? def->unit : std::string{}});
  }

  std::vector<std::vector<Sample>> samples(request.channels.size());
  for (const MeasurementRecord& r : records) {
    ReportRow row{r.timestamp, {}};
    for (std::size_t c = 0; c < request.channels.size(); ++c) {
      const store::Reading& reading = r.channels.at(request.channels[c]);
      row.cells.push_back(DisplayCell::from(reading));
      samples[c].push_back({r.timestamp, reading.value, reading.status});
    }
    table.rows.push_back(std::move(row));
  }
  for (const auto& s : samples) table.stats.push_back(field_stats(s, request.interval, request.period));
  table.total_rows = table.rows.size();
  table.expected_slots = store::expected_count(request.interval, from, to);
  return table;
}

Page paginate(const ReportTable& table, int page) {
  Page out;
  out.total_rows = table.rows.size();
  out.total_pages = std::max<int>(1, static_cast<int>((out.total_rows + kPageSize - 1) / kPageSize));
  out.page = std::clamp(page, 1, out.total_pages);
  const std::size_t begin = static_cast<std::size_t>(out.page - 1) * kPageSize;
  const std::size_t end = std::min(out.total_rows, begin + kPageSize);
  if (begin < end) out.rows = std::span(table.rows).subspan(begin, end - begin);
  return out;
}

std::string found_banner(std::size_t total_rows) {
  return std::to_string(total_rows) + " measurements were found";
}

std::string page_label(const Page& page) {
  return "page " + std::to_string(page.page) + " from " + std::to_string(page.total_pages);
}

// ---------------------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void csv_row(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_field(cells[i]);
  }
  out += "\r\n";
}

std::string spreadsheet_time(TimePoint t) {
  std::string s = format_timestamp(t);
  s[10] = ' ';
  return s;
}

std::string column_header(const ReportColumn& c) {
  std::string h = "value" + std::to_string(c.index) + " " + c.name;
  if (!c.unit.empty()) h += " (" + c.unit + ")";
  return h;
}

}  // namespace

std::string export_csv(const ReportTable& table) {
  std::string out = "\xEF\xBB\xBF";
  std::vector<std::string> header{"Date_Time"};
  for (const auto& c : table.columns) header.push_back(column_header(c));
  csv_row(out, header);

  for (const auto& row : table.rows) {
    std::vector<std::string> cells{spreadsheet_time(row.timestamp)};
    for (const auto& cell : row.cells) cells.push_back(cell.render());
    csv_row(out, cells);
  }

  using Getter = std::string (*)(const FieldStats&);
  const std::pair<const char*, Getter> stat_rows[] = {
      {"Average", [](const FieldStats& s) { return store::format_value(s.average); }},
      {"Minimum", [](const FieldStats& s) { return store::format_value(s.minimum); }},
      {"Minimum time", [](const FieldStats& s) { return spreadsheet_time(s.min_time); }},
      {"Minimum count", [](const FieldStats& s) { return std::to_string(s.min_count); }},
      {"Maximum", [](const FieldStats& s) { return store::format_value(s.maximum); }},
      {"Maximum time", [](const FieldStats& s) { return spreadsheet_time(s.max_time); }},
      {"Sum", [](const FieldStats& s) { return store::format_value(s.sum); }},
      {"Count", [](const FieldStats& s) { return std::to_string(s.count); }},
      {"Percent", [](const FieldStats& s) { return store::format_value(s.percent); }},
  };
  for (const auto& [label, get] : stat_rows) {
    std::vector<std::string> cells{label};
    for (const auto& st : table.stats) cells.push_back(st ? get(*st) : std::string(kNoDataMarker));
    csv_row(out, cells);
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) fail(ErrorCode::BadCsv, "quote inside unquoted field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::BadCsv, "unterminated quoted field");
  if (field_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string export_stream_csv(const store::MeasurementStore& store, const store::StreamKey& key,
                              const Period& period) {
  auto records = store.query_all(key, period_begin(period), period_end(period, key.interval));
  std::set<int> indices;
  for (const auto& def : store.channels().channels_for(key.station_id)) indices.insert(def.index);
  for (const auto& r : records)
    for (const auto& [index, reading] : r.channels) indices.insert(index);
  ReportRequest request{key.station_id, {indices.begin(), indices.end()}, key.interval, period,
                        Category::Custom};
  return export_csv(build_report(store, request));
}

std::size_t import_stream_csv(store::MeasurementStore& store, const store::StreamKey& key,
                              std::string_view csv) {
  auto rows = parse_csv(csv);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "Date_Time")
    fail(ErrorCode::BadCsv, "missing Date_Time header");

  static const std::regex column_re(R"(^value(\d+)(\s.*)?$)");
  std::vector<int> indices;
  for (std::size_t i = 1; i < rows[0].size(); ++i) {
    std::smatch m;
    if (!std::regex_match(rows[0][i], m, column_re))
      fail(ErrorCode::BadCsv, "unrecognised column '" + rows[0][i] + "'");
    indices.push_back(std::stoi(m[1].str()));
  }

  std::vector<MeasurementRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.empty()) continue;
    auto t = parse_timestamp(cells[0]);
    if (!t) continue;  // statistics block
    MeasurementRecord rec{*t, {}};
    for (std::size_t c = 1; c < cells.size() && c - 1 < indices.size(); ++c) {
      const std::string& cell = cells[c];
      const int index = indices[c - 1];
      if (cell.empty()) continue;
      if (cell == kOffscanMarker) {
        rec.channels[index] = {0.0, ValidityStatus::Offscan};
      } else if (cell == kNoDataMarker) {
        rec.channels[index] = {0.0, ValidityStatus::Missing};
      } else if (auto v = store::parse_value(cell)) {
        rec.channels[index] = {*v, ValidityStatus::Valid};
      } else {
        fail(ErrorCode::BadCsv, "bad cell '" + cell + "' on row " + std::to_string(r + 1));
      }
    }
    records.push_back(std::move(rec));
  }
  return store.put_records(key, records);
}

}  // namespace aqmeis::report
