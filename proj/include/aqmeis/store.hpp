#pragma once

#include <compare>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aqmeis/error.hpp"
#include "aqmeis/time.hpp"

namespace aqmeis::store {

enum class Interval { FiveMin, SixtyMin };

constexpr int interval_minutes(Interval i) { return i == Interval::FiveMin ? 5 : 60; }
constexpr int slots_per_day(Interval i) { return 24 * 60 / interval_minutes(i); }
/// "05" / "60", as in the s001t05 / s001t60 stream names.
std::string_view interval_code(Interval i);
std::optional<Interval> parse_interval_code(std::string_view code);

/// Numeric codes are persisted and sent on the wire.
enum class ValidityStatus : int { Valid = 0, Offscan = 1, Missing = 2 };
std::optional<ValidityStatus> status_from_code(int code);

enum class ChannelKind { Meteorological, Pollutant };

constexpr int kMaxChannels = 32;

struct ChannelDef {
  int index = 0;  // 1..32
  std::string name;
  std::string unit;
  ChannelKind kind = ChannelKind::Meteorological;
  bool circular = false;  // wind direction: vector mean when aggregating
};

struct Reading {
  double value = 0.0;
  ValidityStatus status = ValidityStatus::Missing;

  bool usable() const { return status == ValidityStatus::Valid; }
  // Missing carries no value, so two Missing readings are always equal.
  friend bool operator==(const Reading& a, const Reading& b) {
    if (a.status != b.status) return false;
    return a.status == ValidityStatus::Missing || a.value == b.value;
  }
};

struct MeasurementRecord {
  TimePoint timestamp{};
  std::map<int, Reading> channels;  // channel index -> reading

  friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

struct StreamKey {
  std::string station_id;
  Interval interval = Interval::FiveMin;

  friend auto operator<=>(const StreamKey&, const StreamKey&) = default;
  std::string name() const;  // s001t05
};

bool aligned(TimePoint t, Interval interval);
TimePoint floor_to_grid(TimePoint t, Interval interval);

/// Number of grid slots in [from, to], inclusive at both ends.
long expected_count(Interval interval, TimePoint from, TimePoint to);

/// Per-station channel metadata. Stations without an explicit list use the
/// default list.
class ChannelCatalog {
 public:
  ChannelCatalog() = default;
  explicit ChannelCatalog(std::vector<ChannelDef> defaults);

  void set_station_channels(const std::string& station_id, std::vector<ChannelDef> defs);
  const std::vector<ChannelDef>& channels_for(std::string_view station_id) const;
  const ChannelDef* find(std::string_view station_id, int index) const;
  bool is_circular(std::string_view station_id, int index) const;
  /// First channel whose name matches (case-insensitive).
  std::optional<int> index_by_name(std::string_view station_id, std::string_view name) const;

 private:
  std::vector<ChannelDef> defaults_;
  std::map<std::string, std::vector<ChannelDef>, std::less<>> per_station_;
};

/// One record as a text line: `<timestamp>;<ch>=<value>:<status>[;...]`.
/// Missing readings are written with an empty value.
std::string format_record_line(const MeasurementRecord& record);
std::string format_value(double v);

struct LineError {
  ErrorCode code;
  std::string detail;
};
std::variant<MeasurementRecord, LineError> parse_record_line(std::string_view line);
std::optional<double> parse_value(std::string_view text);

using StationPredicate = std::function<bool(std::string_view)>;

/// Validity-aware time-series store, one stream per (station, interval),
/// partitioned by day on disk. An empty data directory path keeps
/// everything in memory.
class MeasurementStore {
 public:
  MeasurementStore(std::filesystem::path data_dir, StationPredicate known_station,
                   ChannelCatalog channels = {});
  ~MeasurementStore();
  MeasurementStore(const MeasurementStore&) = delete;
  MeasurementStore& operator=(const MeasurementStore&) = delete;

  std::size_t put_records(const StreamKey& key, std::span<const MeasurementRecord> records);

  std::vector<MeasurementRecord> query_range(const StreamKey& key, TimePoint from, TimePoint to,
                                             std::span<const int> channels) const;
  /// Every stored channel, no projection.
  std::vector<MeasurementRecord> query_all(const StreamKey& key, TimePoint from,
                                           TimePoint to) const;

  MeasurementRecord aggregate_hour(std::string_view station_id, TimePoint hour_start) const;
  /// aggregate_hour + upsert into the SixtyMin stream.
  MeasurementRecord refresh_hour(std::string_view station_id, TimePoint hour_start);

  std::size_t size(const StreamKey& key) const;
  std::optional<TimePoint> latest(const StreamKey& key) const;
  std::vector<StreamKey> streams() const;

  const ChannelCatalog& channels() const { return channels_; }
  bool is_known(std::string_view station_id) const;

 private:
  struct Stream;
  Stream* find_stream(const StreamKey& key) const;
  Stream& stream(const StreamKey& key);
  void load();
  void persist_day(const StreamKey& key, const Stream& s, Date day) const;

  std::filesystem::path dir_;
  StationPredicate known_;
  ChannelCatalog channels_;
  mutable std::mutex streams_mutex_;
  std::map<StreamKey, std::unique_ptr<Stream>> streams_;
};

}  // namespace aqmeis::store
