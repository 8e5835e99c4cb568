#include "aqmeis/store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "aqmeis/log.hpp"

namespace aqmeis::store {

namespace fs = std::filesystem;
using std::chrono::minutes;

std::string_view interval_code(Interval i) { return i == Interval::FiveMin ? "05" : "60"; }

std::optional<Interval> parse_interval_code(std::string_view code) {
  if (code == "05") return Interval::FiveMin;
  if (code == "60") return Interval::SixtyMin;
  return std::nullopt;
}

std::optional<ValidityStatus> status_from_code(int code) {
  switch (code) {
    case 0: return ValidityStatus::Valid;
    case 1: return ValidityStatus::Offscan;
    case 2: return ValidityStatus::Missing;
    default: return std::nullopt;
  }
}

std::string StreamKey::name() const {
  return station_id + "t" + std::string(interval_code(interval));
}

bool aligned(TimePoint t, Interval interval) {
  return minute_of_hour(t) % interval_minutes(interval) == 0;
}

TimePoint floor_to_grid(TimePoint t, Interval interval) {
  return t - minutes{minute_of_hour(t) % interval_minutes(interval)};
}

long expected_count(Interval interval, TimePoint from, TimePoint to) {
  if (from > to) fail(ErrorCode::InvertedRange, "expected_count: from > to");
  const long step = interval_minutes(interval);
  // first grid slot >= from
  TimePoint first = floor_to_grid(from, interval);
  if (first < from) first += minutes{step};
  if (first > to) return 0;
  return (to - first).count() / step + 1;
}

// ---------------------------------------------------------------------------

ChannelCatalog::ChannelCatalog(std::vector<ChannelDef> defaults) : defaults_(std::move(defaults)) {}

void ChannelCatalog::set_station_channels(const std::string& station_id,
                                          std::vector<ChannelDef> defs) {
  per_station_[station_id] = std::move(defs);
}

const std::vector<ChannelDef>& ChannelCatalog::channels_for(std::string_view station_id) const {
  auto it = per_station_.find(station_id);
  return it == per_station_.end() ? defaults_ : it->second;
}

const ChannelDef* ChannelCatalog::find(std::string_view station_id, int index) const {
  for (const auto& def : channels_for(station_id))
    if (def.index == index) return &def;
  return nullptr;
}

bool ChannelCatalog::is_circular(std::string_view station_id, int index) const {
  const ChannelDef* def = find(station_id, index);
  return def != nullptr && def->circular;
}

std::optional<int> ChannelCatalog::index_by_name(std::string_view station_id,
                                                 std::string_view name) const {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const std::string wanted = lower(name);
  for (const auto& def : channels_for(station_id))
    if (lower(def.name) == wanted) return def.index;
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string format_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::optional<double> parse_value(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

std::string format_record_line(const MeasurementRecord& record) {
  std::string line = format_timestamp(record.timestamp);
  for (const auto& [index, reading] : record.channels) {
    line += ';';
    line += std::to_string(index);
    line += '=';
    if (reading.status != ValidityStatus::Missing) line += format_value(reading.value);
    line += ':';
    line += std::to_string(static_cast<int>(reading.status));
  }
  return line;
}

std::variant<MeasurementRecord, LineError> parse_record_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  for (std::size_t start = 0;;) {
    auto pos = line.find(';', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }

  MeasurementRecord record;
  auto t = parse_timestamp(fields.front());
  if (!t)
    return LineError{ErrorCode::BadTimestamp, "bad timestamp '" + std::string(fields.front()) + "'"};
  record.timestamp = *t;
  if (fields.size() == 1) return LineError{ErrorCode::BadValue, "line carries no channel readings"};

  for (std::size_t i = 1; i < fields.size(); ++i) {
    std::string_view field = fields[i];
    auto eq = field.find('=');
    auto colon = field.rfind(':');
    if (eq == std::string_view::npos || colon == std::string_view::npos || colon < eq)
      return LineError{ErrorCode::BadValue, "malformed reading '" + std::string(field) + "'"};

    std::string_view ch_text = field.substr(0, eq);
    std::string_view value_text = field.substr(eq + 1, colon - eq - 1);
    std::string_view status_text = field.substr(colon + 1);

    int index = 0;
    auto [cp, cec] = std::from_chars(ch_text.data(), ch_text.data() + ch_text.size(), index);
    if (cec != std::errc{} || cp != ch_text.data() + ch_text.size() || index < 1 ||
        index > kMaxChannels)
      return LineError{ErrorCode::BadChannelIndex,
                       "channel index '" + std::string(ch_text) + "' outside 1..32"};

    int code = -1;
    auto [sp, sec] =
        std::from_chars(status_text.data(), status_text.data() + status_text.size(), code);
    auto status = (sec == std::errc{} && sp == status_text.data() + status_text.size())
                      ? status_from_code(code)
                      : std::nullopt;
    if (!status)
      return LineError{ErrorCode::BadStatusCode,
                       "status '" + std::string(status_text) + "' not in {0,1,2}"};

    Reading reading{0.0, *status};
    if (*status == ValidityStatus::Missing) {
      if (!value_text.empty() && !parse_value(value_text))
        return LineError{ErrorCode::BadValue, "bad value '" + std::string(value_text) + "'"};
    } else {
      auto v = parse_value(value_text);
      if (!v) return LineError{ErrorCode::BadValue, "bad value '" + std::string(value_text) + "'"};
      reading.value = *v;
    }
    if (!record.channels.emplace(index, reading).second)
      return LineError{ErrorCode::DuplicateChannel,
                       "channel " + std::to_string(index) + " repeated"};
  }
  return record;
}

// ---------------------------------------------------------------------------

struct MeasurementStore::Stream {
  mutable std::shared_mutex mutex;
  std::map<TimePoint, MeasurementRecord> records;
};

namespace {

bool safe_station_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

MeasurementRecord normalized(const MeasurementRecord& in) {
  MeasurementRecord out = in;
  for (auto& [index, reading] : out.channels)
    if (reading.status == ValidityStatus::Missing) reading.value = 0.0;
  return out;
}

double circular_mean_deg(std::span<const double> degrees) {
  double s = 0, c = 0;
  for (double d : degrees) {
    const double r = d * std::numbers::pi / 180.0;
    s += std::sin(r);
    c += std::cos(r);
  }
  double deg = std::atan2(s, c) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

}  // namespace

MeasurementStore::MeasurementStore(fs::path data_dir, StationPredicate known_station,
                                   ChannelCatalog channels)
    : dir_(std::move(data_dir)), known_(std::move(known_station)), channels_(std::move(channels)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::DataDirError, "cannot create " + dir_.string() + ": " + ec.message());
    load();
  }
}

MeasurementStore::~MeasurementStore() = default;

bool MeasurementStore::is_known(std::string_view station_id) const {
  return safe_station_id(station_id) && (!known_ || known_(station_id));
}

MeasurementStore::Stream* MeasurementStore::find_stream(const StreamKey& key) const {
  std::lock_guard lock(streams_mutex_);
  auto it = streams_.find(key);
  return it == streams_.end() ? nullptr : it->second.get();
}

MeasurementStore::Stream& MeasurementStore::stream(const StreamKey& key) {
  std::lock_guard lock(streams_mutex_);
  auto& slot = streams_[key];
  if (!slot) slot = std::make_unique<Stream>();
  return *slot;
}

std::size_t MeasurementStore::put_records(const StreamKey& key,
                                          std::span<const MeasurementRecord> records) {
  if (!is_known(key.station_id)) fail(ErrorCode::UnknownStation, key.station_id);
  for (const auto& r : records) {
    if (!aligned(r.timestamp, key.interval))
      fail(ErrorCode::MisalignedTimestamp,
           format_timestamp(r.timestamp) + " is off the " + key.name() + " grid");
    for (const auto& [index, reading] : r.channels)
      if (index < 1 || index > kMaxChannels)
        fail(ErrorCode::BadChannelIndex, "channel " + std::to_string(index));
  }

  Stream& s = stream(key);
  std::unique_lock lock(s.mutex);
  std::set<Date> touched;
  for (const auto& r : records) {
    s.records.insert_or_assign(r.timestamp, normalized(r));
    touched.insert(date_of(r.timestamp));
  }
  if (!dir_.empty())
    for (Date day : touched) persist_day(key, s, day);
  return records.size();
}

std::vector<MeasurementRecord> MeasurementStore::query_all(const StreamKey& key, TimePoint from,
                                                           TimePoint to) const {
  if (from > to) fail(ErrorCode::InvertedRange, "query: from > to");
  std::vector<MeasurementRecord> out;
  const Stream* s = find_stream(key);
  if (s == nullptr) return out;
  std::shared_lock lock(s->mutex);
  for (auto it = s->records.lower_bound(from); it != s->records.end() && it->first <= to; ++it)
    out.push_back(it->second);
  return out;
}

std::vector<MeasurementRecord> MeasurementStore::query_range(const StreamKey& key, TimePoint from,
                                                             TimePoint to,
                                                             std::span<const int> channels) const {
  if (channels.empty()) fail(ErrorCode::EmptyChannelSet, "no channels requested");
  if (from > to) fail(ErrorCode::InvertedRange, "query: from > to");
  std::vector<MeasurementRecord> out = query_all(key, from, to);
  for (auto& record : out) {
    std::map<int, Reading> projected;
    for (int index : channels) {
      auto it = record.channels.find(index);
      projected[index] = it == record.channels.end() ? Reading{} : it->second;
    }
    record.channels = std::move(projected);
  }
  return out;
}

MeasurementRecord MeasurementStore::aggregate_hour(std::string_view station_id,
                                                   TimePoint hour_start) const {
  if (!is_known(station_id)) fail(ErrorCode::UnknownStation, std::string(station_id));
  if (minute_of_hour(hour_start) != 0)
    fail(ErrorCode::MisalignedTimestamp, format_timestamp(hour_start) + " is not an hour start");

  const StreamKey src{std::string(station_id), Interval::FiveMin};
  auto sources = query_all(src, hour_start, hour_start + minutes{55});

  struct Acc {
    std::vector<double> valid;
    int offscan = 0;
  };
  std::map<int, Acc> acc;
  for (const auto& def : channels_.channels_for(station_id)) acc[def.index];
  for (const auto& record : sources)
    for (const auto& [index, reading] : record.channels) {
      Acc& a = acc[index];
      if (reading.status == ValidityStatus::Valid) a.valid.push_back(reading.value);
      else if (reading.status == ValidityStatus::Offscan) ++a.offscan;
    }

  MeasurementRecord out;
  out.timestamp = hour_start;
  for (const auto& [index, a] : acc) {
    Reading r;
    if (!a.valid.empty()) {
      r.status = ValidityStatus::Valid;
      if (channels_.is_circular(station_id, index)) {
        r.value = circular_mean_deg(a.valid);
      } else {
        double sum = 0;
        for (double v : a.valid) sum += v;
        r.value = sum / static_cast<double>(a.valid.size());
      }
    } else if (a.offscan > 0) {
      r.status = ValidityStatus::Offscan;
    }
    out.channels.emplace(index, r);
  }
  return out;
}

MeasurementRecord MeasurementStore::refresh_hour(std::string_view station_id,
                                                 TimePoint hour_start) {
  MeasurementRecord hourly = aggregate_hour(station_id, hour_start);
  put_records({std::string(station_id), Interval::SixtyMin}, std::span(&hourly, 1));
  return hourly;
}

std::size_t MeasurementStore::size(const StreamKey& key) const {
  const Stream* s = find_stream(key);
  if (s == nullptr) return 0;
  std::shared_lock lock(s->mutex);
  return s->records.size();
}

std::optional<TimePoint> MeasurementStore::latest(const StreamKey& key) const {
  const Stream* s = find_stream(key);
  if (s == nullptr) return std::nullopt;
  std::shared_lock lock(s->mutex);
  if (s->records.empty()) return std::nullopt;
  return s->records.rbegin()->first;
}

std::vector<StreamKey> MeasurementStore::streams() const {
  std::lock_guard lock(streams_mutex_);
  std::vector<StreamKey> keys;
  for (const auto& [key, s] : streams_) keys.push_back(key);
  return keys;
}

// On-disk layout: <dir>/<station>/t05/<YYYY-MM-DD>.dat, one record line each.
void MeasurementStore::persist_day(const StreamKey& key, const Stream& s, Date day) const {
  const fs::path folder = dir_ / key.station_id / ("t" + std::string(interval_code(key.interval)));
  std::error_code ec;
  fs::create_directories(folder, ec);
  if (ec) fail(ErrorCode::DataDirError, "cannot create " + folder.string());

  const fs::path target = folder / (format_date(day) + ".dat");
  const fs::path tmp = folder / (format_date(day) + ".dat.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::DataDirError, "cannot write " + tmp.string());
    const TimePoint begin = start_of(day);
    const TimePoint end = start_of(day + std::chrono::days{1});
    for (auto it = s.records.lower_bound(begin); it != s.records.end() && it->first < end; ++it)
      out << format_record_line(it->second) << '\n';
    if (!out.flush()) fail(ErrorCode::DataDirError, "short write to " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::DataDirError, "cannot replace " + target.string());
}

void MeasurementStore::load() {
  std::error_code ec;
  for (const auto& station_dir : fs::directory_iterator(dir_, ec)) {
    if (!station_dir.is_directory()) continue;
    const std::string station = station_dir.path().filename().string();
    for (Interval interval : {Interval::FiveMin, Interval::SixtyMin}) {
      const fs::path folder = station_dir.path() / ("t" + std::string(interval_code(interval)));
      if (!fs::is_directory(folder)) continue;
      Stream& s = stream({station, interval});
      for (const auto& file : fs::directory_iterator(folder)) {
        if (file.path().extension() != ".dat") continue;
        std::ifstream in(file.path());
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          auto parsed = parse_record_line(line);
          if (auto* rec = std::get_if<MeasurementRecord>(&parsed))
            s.records.insert_or_assign(rec->timestamp, std::move(*rec));
          else
            log::warn("store", "skipping corrupt line in " + file.path().string());
        }
      }
    }
  }
  if (ec) fail(ErrorCode::DataDirError, "cannot scan " + dir_.string() + ": " + ec.message());
}

}  // namespace aqmeis::store
