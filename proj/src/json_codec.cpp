#include "json_codec.hpp"

#include <charconv>

namespace aqmeis::codec {

json error_body(ErrorCode code, std::string_view message) {
  return {{"error", {{"code", error_name(code)}, {"number", static_cast<int>(code)}, {"message", message}}}};
}

json to_json(const geo::Station& s) {
  return {{"id", s.id},         {"category", s.category},       {"municipality", s.municipality},
          {"address", s.address}, {"title", s.title},           {"en_city", s.en_city},
          {"description", s.description}, {"lat", s.lat},       {"lon", s.lon},
          {"thumb", s.thumb},   {"image", s.image},             {"stream_id", s.stream_id}};
}

json to_json(const geo::Municipality& m) {
  return {{"id", m.id}, {"title", m.title}, {"en_title", m.en_title}, {"lat", m.lat}, {"lon", m.lon}};
}

json to_json(const geo::StationCategory& c) {
  return {{"id", c.id}, {"title", c.title}, {"en_title", c.en_title}, {"kind", geo::kind_name(c.kind)}};
}

namespace {

[[noreturn]] void bad_request(const std::string& what) { fail(ErrorCode::BadRequest, what); }

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  T v{};
  read_field(j, key, v);
  out = std::move(v);
}

void object_only(const json& j) {
  if (!j.is_object()) bad_request("request body must be a JSON object");
}

}  // namespace

geo::Station station_from_json(const json& j) {
  object_only(j);
  geo::Station s;
  for (const char* required : {"category", "municipality", "title", "lat", "lon"})
    if (!j.contains(required)) bad_request(std::string("missing field '") + required + "'");
  read_field(j, "category", s.category);
  read_field(j, "municipality", s.municipality);
  read_field(j, "address", s.address);
  read_field(j, "title", s.title);
  read_field(j, "en_city", s.en_city);
  read_field(j, "description", s.description);
  read_field(j, "lat", s.lat);
  read_field(j, "lon", s.lon);
  read_field(j, "thumb", s.thumb);
  read_field(j, "image", s.image);
  read_field(j, "stream_id", s.stream_id);
  return s;
}

geo::StationPatch patch_from_json(const json& j) {
  object_only(j);
  geo::StationPatch p;
  read_opt(j, "category", p.category);
  read_opt(j, "municipality", p.municipality);
  read_opt(j, "address", p.address);
  read_opt(j, "title", p.title);
  read_opt(j, "en_city", p.en_city);
  read_opt(j, "description", p.description);
  read_opt(j, "lat", p.lat);
  read_opt(j, "lon", p.lon);
  read_opt(j, "thumb", p.thumb);
  read_opt(j, "image", p.image);
  read_opt(j, "stream_id", p.stream_id);
  return p;
}

geo::Municipality municipality_from_json(const json& j) {
  object_only(j);
  geo::Municipality m;
  for (const char* required : {"title", "lat", "lon"})
    if (!j.contains(required)) bad_request(std::string("missing field '") + required + "'");
  read_field(j, "id", m.id);
  read_field(j, "title", m.title);
  read_field(j, "en_title", m.en_title);
  read_field(j, "lat", m.lat);
  read_field(j, "lon", m.lon);
  return m;
}

geo::StationCategory category_from_json(const json& j) {
  object_only(j);
  geo::StationCategory c;
  if (!j.contains("title")) bad_request("missing field 'title'");
  read_field(j, "id", c.id);
  read_field(j, "title", c.title);
  read_field(j, "en_title", c.en_title);
  std::string kind = "both";
  read_field(j, "kind", kind);
  auto k = geo::parse_kind(kind);
  if (!k) bad_request("kind must be meteorological, pollution or both");
  c.kind = *k;
  return c;
}

const std::string& require(const Params& params, std::string_view key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) bad_request("missing parameter '" + std::string(key) + "'");
  return it->second;
}

Date date_param(const Params& params, std::string_view key) {
  auto d = parse_date(require(params, key));
  if (!d) bad_request("parameter '" + std::string(key) + "' must be YYYY-MM-DD");
  return *d;
}

TimePoint time_param(const Params& params, std::string_view key) {
  auto t = parse_timestamp(require(params, key));
  if (!t) bad_request("parameter '" + std::string(key) + "' must be YYYY-MM-DDTHH:MM");
  return *t;
}

int int_param(std::string_view text, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) bad_request(std::string(what) + " must be an integer");
  return v;
}

Params params_from_json(const json& j) {
  object_only(j);
  Params out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string()) out[k] = v.get<std::string>();
    else if (v.is_array()) {
      std::string joined;
      for (const auto& x : v) joined += (joined.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      out[k] = joined;
    } else out[k] = v.dump();
  }
  return out;
}

report::ReportRequest report_request_from(const Params& params, Date today) {
  report::ReportRequest r;
  auto st = params.find("station");
  if (st != params.end()) r.station_id = st->second;
  auto ch = params.find("channels");
  if (ch != params.end()) {
    std::string_view rest = ch->second;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto item = rest.substr(0, comma);
      if (!item.empty()) r.channels.push_back(int_param(item, "channel"));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }
  auto iv = params.find("interval");
  if (iv != params.end()) {
    auto i = store::parse_interval_code(iv->second == "5" ? "05" : iv->second);
    if (!i) bad_request("interval must be 05 or 60");
    r.interval = *i;
  }
  auto cat = params.find("category");
  r.category = report::Category::Daily;
  if (cat != params.end()) {
    auto c = report::parse_category(cat->second);
    if (!c) bad_request("category must be daily, weekly, monthly or custom");
    r.category = *c;
  }
  if (r.category == report::Category::Custom) {
    r.period = {date_param(params, "from"), date_param(params, "to")};
  } else {
    r.period = report::default_period(r.category, today);
  }
  return r;
}

json to_json(const std::optional<report::FieldStats>& s) {
  if (!s) return nullptr;
  return {{"average", s->average},
          {"minimum", s->minimum},
          {"minimum_time", format_timestamp(s->min_time)},
          {"minimum_count", s->min_count},
          {"maximum", s->maximum},
          {"maximum_time", format_timestamp(s->max_time)},
          {"sum", s->sum},
          {"count", s->count},
          {"percent", s->percent}};
}

json to_json(const report::ReportTable& table, const report::Page& page) {
  json columns = json::array();
  for (const auto& c : table.columns) columns.push_back({{"index", c.index}, {"name", c.name}, {"unit", c.unit}});
  json rows = json::array();
  for (const auto& row : page.rows) {
    json cells = json::array();
    for (const auto& cell : row.cells) {
      json jc = {{"text", cell.render()}};
      switch (cell.kind) {
        case report::DisplayCell::Kind::Number: jc["kind"] = "number"; jc["value"] = cell.value; break;
        case report::DisplayCell::Kind::Offscan: jc["kind"] = "offscan"; break;
        case report::DisplayCell::Kind::NoData: jc["kind"] = "nodata"; break;
      }
      cells.push_back(std::move(jc));
    }
    rows.push_back({{"timestamp", format_timestamp(row.timestamp)}, {"cells", std::move(cells)}});
  }
  json stats = json::array();
  for (const auto& s : table.stats) stats.push_back(to_json(s));
  return {{"station", table.request.station_id},
          {"interval", store::interval_code(table.request.interval)},
          {"category", report::category_name(table.request.category)},
          {"period", {{"from", format_date(table.request.period.from)}, {"to", format_date(table.request.period.to)}}},
          {"columns", std::move(columns)},
          {"banner", report::found_banner(table.total_rows)},
          {"page", page.page},
          {"total_pages", page.total_pages},
          {"page_label", report::page_label(page)},
          {"total_rows", table.total_rows},
          {"expected_slots", table.expected_slots},
          {"rows", std::move(rows)},
          {"stats", std::move(stats)}};
}

json to_json(const aqi::DailyIndexPair& p, const aqi::BreakpointTable& table) {
  auto side = [&](const std::optional<int>& idx) -> json {
    if (!idx) return nullptr;
    return {{"index", *idx}, {"color", aqi::index_color(table, *idx)}};
  };
  return {{"station", p.station_id},
          {"date", format_date(p.date)},
          {"pollutant", table.pollutant},
          {"current", side(p.current)},
          {"previous", side(p.previous)}};
}

json to_json(const forecast::DaySeries& s) {
  json hours = json::array();
  for (const auto& h : s.hours) hours.push_back({{"hour", h.hour}, {"value", h.value ? json(*h.value) : json(nullptr)}});
  return {{"date", format_date(s.date)}, {"hours", std::move(hours)}};
}

json to_json(const std::array<forecast::PrecipBucket, 4>& buckets) {
  json out = json::array();
  for (const auto& b : buckets)
    out.push_back({{"from_hour", b.from_hour}, {"to_hour", b.to_hour}, {"total", b.total}, {"complete", b.complete}});
  return out;
}

json to_json(const ingest::IngestReport& r) {
  json rejected = json::array();
  for (const auto& l : r.rejected)
    rejected.push_back({{"line", l.line_number}, {"reason", error_name(l.reason)}, {"text", l.text}});
  json hours = json::array();
  for (auto t : r.refreshed_hours) hours.push_back(format_timestamp(t));
  return {{"station", r.station_id}, {"accepted", r.accepted}, {"rejected", std::move(rejected)},
          {"refreshed_hours", std::move(hours)}};
}

}  // namespace aqmeis::codec
