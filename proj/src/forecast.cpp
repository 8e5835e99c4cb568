#include "aqmeis/forecast.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

#include "aqmeis/log.hpp"
#include "aqmeis/store.hpp"

namespace aqmeis::forecast {

namespace fs = std::filesystem;
using namespace std::chrono;

std::vector<Location> default_locations() {
  return {{"amyntaio", "Amyntaio"},   {"florina", "Florina"},   {"grevena", "Grevena"},
          {"kastoria", "Kastoria"},   {"kkomi", "Koilada-Komi"}, {"kozani", "Kozani"},
          {"npedio", "Neo Pedio"},    {"petrana", "Petrana"},   {"pontokomi", "Pontokomi"},
          {"ptl", "Ptolemaida"},      {"servia", "Servia"},     {"siatista", "Siatista"}};
}

namespace {

struct ParamInfo {
  std::string_view name;
  std::string_view unit;
  std::string_view description;
};

constexpr std::array<ParamInfo, kParameterCount> kInfo = {{
    {"WDIR", "deg", "wind direction"},
    {"TEMP", "C", "air temperature"},
    {"RHUM", "%", "relative humidity"},
    {"TEMPSCR", "C", "screen-level temperature"},
    {"RHUMSCR", "%", "screen-level relative humidity"},
    {"TSR", "W/m2", "total solar radiation"},
    {"NETR", "W/m2", "net radiation"},
    {"SENS", "W/m2", "sensible heat flux"},
    {"EVAP", "W/m2", "evaporative heat flux"},
    {"WSTAR", "m/s", "convective velocity scale"},
    {"ZMIX", "m", "mixing height"},
    {"USTAR", "m/s", "friction velocity"},
    {"LSTAR", "m", "Monin-Obukhov length"},
    {"RAIN", "mm", "rainfall"},
    {"SNOW", "mm", "snowfall"},
}};

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool safe_component(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '.';
  }) && s != "." && s != "..";
}

}  // namespace

std::string_view param_name(MetParameter p) { return kInfo[static_cast<std::size_t>(p)].name; }
std::string_view param_unit(MetParameter p) { return kInfo[static_cast<std::size_t>(p)].unit; }
std::string_view param_description(MetParameter p) { return kInfo[static_cast<std::size_t>(p)].description; }

std::optional<MetParameter> parse_param(std::string_view name) {
  for (std::size_t i = 0; i < kParameterCount; ++i) {
    auto n = kInfo[i].name;
    if (n.size() == name.size() &&
        std::equal(n.begin(), n.end(), name.begin(), [](char a, char b) {
          return a == std::toupper(static_cast<unsigned char>(b));
        }))
      return static_cast<MetParameter>(i);
  }
  return std::nullopt;
}

const std::array<MetParameter, kParameterCount>& all_parameters() {
  static const auto all = [] {
    std::array<MetParameter, kParameterCount> a{};
    for (std::size_t i = 0; i < kParameterCount; ++i) a[i] = static_cast<MetParameter>(i);
    return a;
  }();
  return all;
}

std::vector<ForecastRow> parse_forecast_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<ForecastRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (!header_seen) {
      std::string upper;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (upper != kForecastCsvHeader) fail(ErrorCode::BadForecastFile, where + ": unexpected header");
      header_seen = true;
      continue;
    }
    auto cells = split(line, ',');
    if (cells.size() != kParameterCount + 2)
      fail(ErrorCode::BadForecastFile, where + ": expected 17 columns, got " + std::to_string(cells.size()));
    ForecastRow row;
    auto date = parse_date(trim(cells[0]));
    if (!date) fail(ErrorCode::BadForecastFile, where + ": bad DATE");
    row.date = *date;
    auto hour = store::parse_value(trim(cells[1]));
    if (!hour || *hour != static_cast<int>(*hour)) fail(ErrorCode::BadForecastFile, where + ": bad HOUR");
    if (*hour < 0 || *hour > 23) fail(ErrorCode::BadHour, where + ": hour " + std::string(trim(cells[1])));
    row.hour = static_cast<int>(*hour);
    for (std::size_t i = 0; i < kParameterCount; ++i) {
      auto cell = trim(cells[i + 2]);
      if (cell.empty()) continue;
      auto v = store::parse_value(cell);
      if (!v) fail(ErrorCode::BadForecastFile, where + ": bad " + std::string(kInfo[i].name) + " value");
      row.values[i] = *v;
    }
    rows.push_back(row);
  }
  if (!header_seen) fail(ErrorCode::BadForecastFile, "missing header");
  return rows;
}

std::string format_forecast_csv(const std::vector<ForecastRow>& rows) {
  std::string out(kForecastCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += format_date(r.date);
    out += ',';
    out += std::to_string(r.hour);
    for (const auto& v : r.values) {
      out += ',';
      if (v) out += store::format_value(*v);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

ForecastStore::ForecastStore(fs::path dir, std::vector<Location> locations)
    : dir_(std::move(dir)), locations_(std::move(locations)) {
  for (const auto& l : locations_) {
    if (!safe_component(l.key)) fail(ErrorCode::ConfigError, "bad forecast location key '" + l.key + "'");
    if (!slots_.emplace(l.key, std::make_unique<Slot>()).second)
      fail(ErrorCode::ConfigError, "duplicate forecast location '" + l.key + "'");
  }
  if (!dir_.empty()) load();
}

bool ForecastStore::has_location(std::string_view key) const { return slots_.find(key) != slots_.end(); }

ForecastStore::Slot& ForecastStore::slot(std::string_view location) const {
  auto it = slots_.find(location);
  if (it == slots_.end()) fail(ErrorCode::UnknownLocation, std::string(location));
  return *it->second;
}

std::size_t ForecastStore::store_rows(std::string_view location, const std::vector<ForecastRow>& rows) {
  auto& s = slot(location);
  for (const auto& r : rows)
    if (r.hour < 0 || r.hour > 23) fail(ErrorCode::BadHour, "hour " + std::to_string(r.hour));
  std::unique_lock lock(s.mutex);
  std::vector<Date> touched;
  for (const auto& r : rows) {
    s.rows[{r.date, r.hour}] = r;
    touched.push_back(r.date);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (Date d : touched) persist_day(location, s, d);
  return rows.size();
}

std::size_t ForecastStore::import_file(std::string_view location, const fs::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, csv.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return store_rows(location, parse_forecast_csv(buf.str()));
}

DaySeries ForecastStore::hourly_series(std::string_view location, MetParameter p, Date date) const {
  const auto& s = slot(location);
  std::shared_lock lock(s.mutex);
  DaySeries out{date, {}};
  out.hours.reserve(24);
  for (int h = 0; h < 24; ++h) {
    auto it = s.rows.find({date, h});
    out.hours.push_back({h, it == s.rows.end() ? std::nullopt : it->second.get(p)});
  }
  return out;
}

std::array<PrecipBucket, 4> ForecastStore::precip_buckets(std::string_view location, Date date) const {
  auto rain = hourly_series(location, MetParameter::RAIN, date);
  std::array<PrecipBucket, 4> out{};
  for (int b = 0; b < 4; ++b) {
    auto& bucket = out[static_cast<std::size_t>(b)];
    bucket.from_hour = b * 6;
    bucket.to_hour = b * 6 + 6;
    for (int h = bucket.from_hour; h < bucket.to_hour; ++h) {
      const auto& v = rain.hours[static_cast<std::size_t>(h)].value;
      if (v) bucket.total += *v;
      else bucket.complete = false;
    }
  }
  return out;
}

std::vector<DaySeries> ForecastStore::history_series(std::string_view location, MetParameter p, Date from,
                                                     Date to) const {
  slot(location);
  if (from > to) fail(ErrorCode::InvertedRange, format_date(from) + " > " + format_date(to));
  std::vector<DaySeries> out;
  for (Date d = from; d <= to; d += days{1}) out.push_back(hourly_series(location, p, d));
  return out;
}

std::optional<ForecastRow> ForecastStore::row(std::string_view location, Date date, int hour) const {
  const auto& s = slot(location);
  std::shared_lock lock(s.mutex);
  auto it = s.rows.find({date, hour});
  if (it == s.rows.end()) return std::nullopt;
  return it->second;
}

std::vector<Date> ForecastStore::dates(std::string_view location) const {
  const auto& s = slot(location);
  std::shared_lock lock(s.mutex);
  std::vector<Date> out;
  for (const auto& [k, _] : s.rows)
    if (out.empty() || out.back() != k.first) out.push_back(k.first);
  return out;
}

void ForecastStore::persist_day(std::string_view location, const Slot& s, Date day) const {
  if (dir_.empty()) return;
  std::vector<ForecastRow> rows;
  for (auto it = s.rows.lower_bound({day, 0}); it != s.rows.end() && it->first.first == day; ++it)
    rows.push_back(it->second);
  const fs::path dir = dir_ / std::string(location);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::DataDirError, "cannot create " + dir.string());
  const fs::path file = dir / (format_date(day) + ".csv");
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << format_forecast_csv(rows);
    if (!out.flush()) fail(ErrorCode::DataDirError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, file, ec);
  if (ec) fail(ErrorCode::DataDirError, "cannot replace " + file.string());
}

void ForecastStore::load() {
  for (auto& [key, s] : slots_) {
    const fs::path dir = dir_ / key;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) continue;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".csv") continue;
      try {
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        for (auto& r : parse_forecast_csv(buf.str())) s->rows[{r.date, r.hour}] = r;
      } catch (const Error& e) {
        log::warn("forecast", "skipping " + entry.path().string() + ": " + e.what());
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::pair<Date, Date> display_window(Date issue_date) { return {issue_date - days{1}, issue_date + days{3}}; }

std::string frame_filename(std::string_view region, std::string_view pollutant, std::string_view source,
                           TimePoint frame_time) {
  std::string out;
  out.append(region).append("_").append(pollutant).append("_").append(source).append("_");
  out += format_compact_timestamp(frame_time);
  out += ".jpg";
  return out;
}

std::optional<ParsedFrameName> parse_frame_filename(std::string_view name) {
  if (!name.ends_with(".jpg")) return std::nullopt;
  name.remove_suffix(4);
  auto parts = split(name, '_');
  if (parts.size() != 4) return std::nullopt;
  for (std::size_t i = 0; i < 3; ++i)
    if (!safe_component(parts[i])) return std::nullopt;
  auto t = parse_compact_timestamp(parts[3]);
  if (!t) return std::nullopt;
  return ParsedFrameName{std::string(parts[0]), std::string(parts[1]), std::string(parts[2]), *t};
}

ImageCatalog::ImageCatalog(fs::path root) : root_(std::move(root)), index_(std::make_shared<Index>()) {
  if (!root_.empty()) rescan();
}

std::size_t ImageCatalog::rescan() {
  auto fresh = std::make_shared<Index>();
  std::size_t found = 0;
  std::error_code ec;
  if (!root_.empty() && fs::is_directory(root_, ec)) {
    for (auto it = fs::recursive_directory_iterator(root_, ec); !ec && it != fs::recursive_directory_iterator();
         it.increment(ec)) {
      if (!it->is_regular_file(ec)) continue;
      auto parsed = parse_frame_filename(it->path().filename().string());
      if (!parsed) continue;
      (*fresh)[{parsed->region, parsed->pollutant, parsed->source}][parsed->time] = it->path();
      ++found;
    }
  }
  std::unique_lock lock(mutex_);
  for (const auto& [series, frames] : registered_)
    for (const auto& [t, file] : frames) (*fresh)[series][t] = file;
  index_ = std::move(fresh);
  return found;
}

void ImageCatalog::register_image(const ImageKey& key, const fs::path& file) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) fail(ErrorCode::MissingFile, file.string());
  auto [lo, hi] = display_window(key.date);
  const Date frame_day = date_of(key.frame_time);
  if (frame_day < lo || frame_day > hi)
    fail(ErrorCode::BadFrameDate, format_timestamp(key.frame_time) + " outside window of " + format_date(key.date));
  if (!safe_component(key.region) || !safe_component(key.pollutant) || !safe_component(key.source))
    fail(ErrorCode::BadRequest, "region, pollutant and source must be simple names");
  Series series{key.region, key.pollutant, key.source};
  std::unique_lock lock(mutex_);
  registered_[series][key.frame_time] = file;
  auto next = std::make_shared<Index>(*index_);
  (*next)[series][key.frame_time] = file;
  index_ = std::move(next);
}

ImageLookup ImageCatalog::lookup_image(std::string_view region, std::string_view pollutant,
                                       std::string_view source, TimePoint when) const {
  std::shared_ptr<const Index> idx;
  {
    std::shared_lock lock(mutex_);
    idx = index_;
  }
  auto it = idx->find(std::tuple{std::string(region), std::string(pollutant), std::string(source)});
  if (it == idx->end()) return {};
  auto f = it->second.find(when);
  if (f == it->second.end()) return {};
  return {true, f->second};
}

std::vector<Frame> ImageCatalog::animation_sequence(std::string_view region, std::string_view pollutant,
                                                    std::string_view source, TimePoint from, TimePoint to) const {
  if (from > to) fail(ErrorCode::InvertedRange, format_timestamp(from) + " > " + format_timestamp(to));
  std::shared_ptr<const Index> idx;
  {
    std::shared_lock lock(mutex_);
    idx = index_;
  }
  std::vector<Frame> out;
  auto it = idx->find(std::tuple{std::string(region), std::string(pollutant), std::string(source)});
  if (it == idx->end()) return out;
  for (auto f = it->second.lower_bound(from); f != it->second.end() && f->first <= to; ++f)
    out.push_back({f->first, f->second});
  return out;
}

std::size_t ImageCatalog::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, frames] : *index_) n += frames.size();
  return n;
}

}  // namespace aqmeis::forecast
