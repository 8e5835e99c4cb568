#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "aqmeis/error.hpp"
#include "aqmeis/time.hpp"

namespace aqmeis::forecast {

struct Location {
  std::string key;
  std::string display_name;
};

/// The twelve model output locations, amyntaio .. siatista.
std::vector<Location> default_locations();

enum class MetParameter {
  WDIR, TEMP, RHUM, TEMPSCR, RHUMSCR, TSR, NETR, SENS, EVAP, WSTAR, ZMIX, USTAR, LSTAR, RAIN, SNOW
};
inline constexpr std::size_t kParameterCount = 15;

std::string_view param_name(MetParameter p);
std::string_view param_unit(MetParameter p);
std::string_view param_description(MetParameter p);
std::optional<MetParameter> parse_param(std::string_view name);  // case-insensitive
const std::array<MetParameter, kParameterCount>& all_parameters();

struct ForecastRow {
  Date date{};
  int hour = 0;
  std::array<std::optional<double>, kParameterCount> values{};

  std::optional<double> get(MetParameter p) const { return values[static_cast<std::size_t>(p)]; }
  void set(MetParameter p, double v) { values[static_cast<std::size_t>(p)] = v; }
  friend bool operator==(const ForecastRow&, const ForecastRow&) = default;
};

struct HourValue {
  int hour = 0;
  std::optional<double> value;  // nullopt = Missing
  friend bool operator==(const HourValue&, const HourValue&) = default;
};

struct DaySeries {
  Date date{};
  std::vector<HourValue> hours;  // always 24
  friend bool operator==(const DaySeries&, const DaySeries&) = default;
};

struct PrecipBucket {
  int from_hour = 0;
  int to_hour = 6;
  double total = 0;
  bool complete = true;  // false when any hour of the window is Missing
};

inline constexpr std::string_view kForecastCsvHeader =
    "DATE,HOUR,WDIR,TEMP,RHUM,TEMPSCR,RHUMSCR,TSR,NETR,SENS,EVAP,WSTAR,ZMIX,USTAR,LSTAR,RAIN,SNOW";

/// Parses the per-location daily CSV; empty cells are Missing.
/// Throws BadForecastFile or BadHour.
std::vector<ForecastRow> parse_forecast_csv(std::string_view text);
std::string format_forecast_csv(const std::vector<ForecastRow>& rows);

class ForecastStore {
 public:
  /// `dir` empty keeps everything in memory; otherwise one CSV per
  /// location and day under `dir/<location>/`.
  ForecastStore(std::filesystem::path dir, std::vector<Location> locations);

  const std::vector<Location>& locations() const { return locations_; }
  bool has_location(std::string_view key) const;

  std::size_t store_rows(std::string_view location, const std::vector<ForecastRow>& rows);
  std::size_t import_file(std::string_view location, const std::filesystem::path& csv);

  DaySeries hourly_series(std::string_view location, MetParameter p, Date date) const;
  std::array<PrecipBucket, 4> precip_buckets(std::string_view location, Date date) const;
  std::vector<DaySeries> history_series(std::string_view location, MetParameter p, Date from, Date to) const;
  std::optional<ForecastRow> row(std::string_view location, Date date, int hour) const;
  /// Dates with at least one stored row.
  std::vector<Date> dates(std::string_view location) const;

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    std::map<std::pair<Date, int>, ForecastRow> rows;
  };
  Slot& slot(std::string_view location) const;
  void persist_day(std::string_view location, const Slot& s, Date day) const;
  void load();

  std::filesystem::path dir_;
  std::vector<Location> locations_;
  std::map<std::string, std::unique_ptr<Slot>, std::less<>> slots_;
};

// ---------------------------------------------------------------------------
// Pollution image catalog

inline constexpr std::string_view kUnavailablePlaceholder = "Pollution Image Display Unavailable";

struct ImageKey {
  std::string region;
  std::string pollutant = "PM10";
  std::string source;
  Date date{};             // issue date of the forecast run
  TimePoint frame_time{};  // must fall inside display_window(date)
};

struct Frame {
  TimePoint time{};
  std::filesystem::path file;
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ImageLookup {
  bool available = false;
  std::filesystem::path file;  // set when available
  std::string label() const { return available ? file.filename().string() : std::string(kUnavailablePlaceholder); }
};

/// Issue date minus one day through issue date plus three days.
std::pair<Date, Date> display_window(Date issue_date);

/// `<region>_<pollutant>_<source>_<YYYYMMDDHHMM>.jpg`
std::string frame_filename(std::string_view region, std::string_view pollutant, std::string_view source,
                           TimePoint frame_time);
struct ParsedFrameName {
  std::string region, pollutant, source;
  TimePoint time{};
};
std::optional<ParsedFrameName> parse_frame_filename(std::string_view name);

class ImageCatalog {
 public:
  explicit ImageCatalog(std::filesystem::path root = {});

  /// Rebuilds the index from the image root and swaps it in whole.
  /// Returns the number of frames found on disk.
  std::size_t rescan();

  /// Throws MissingFile or BadFrameDate.
  void register_image(const ImageKey& key, const std::filesystem::path& file);

  ImageLookup lookup_image(std::string_view region, std::string_view pollutant, std::string_view source,
                           TimePoint when) const;

  /// Registered frames in [from, to], ascending. Throws InvertedRange.
  std::vector<Frame> animation_sequence(std::string_view region, std::string_view pollutant,
                                        std::string_view source, TimePoint from, TimePoint to) const;

  const std::filesystem::path& root() const { return root_; }
  std::size_t size() const;

 private:
  using Series = std::tuple<std::string, std::string, std::string>;
  using Index = std::map<Series, std::map<TimePoint, std::filesystem::path>, std::less<>>;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::shared_ptr<const Index> index_;
  Index registered_;
};

}  // namespace aqmeis::forecast
