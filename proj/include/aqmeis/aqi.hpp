#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aqmeis/store.hpp"

namespace aqmeis::aqi {

inline constexpr int kBands = 10;

/// Nine ascending concentration thresholds (ug/m3) split the scale into
/// bands 1..10; one display color per band.
struct BreakpointTable {
  std::string pollutant = "PM10";
  std::vector<double> thresholds;
  std::vector<std::string> colors;

  /// 20, 40, ..., 180 ug/m3 with a green to red ramp. A placeholder banding,
  /// deployments override it in the config file.
  static BreakpointTable default_pm10();
  /// Throws Error(BadBreakpointTable).
  void validate() const;
};

/// 1 + number of thresholds <= mean, so a mean sitting exactly on a
/// threshold belongs to the upper band.
int compute_index(const BreakpointTable& table, double daily_mean);
const std::string& index_color(const BreakpointTable& table, int index);

struct DailyIndexPair {
  std::string station_id;
  Date date{};
  std::optional<int> previous;
  std::optional<int> current;
};

/// Index of the mean of the Valid hourly pollutant values on `day`, or
/// nullopt when there are none.
std::optional<int> daily_index(const store::MeasurementStore& store, const BreakpointTable& table,
                               std::string_view station_id, Date day);
DailyIndexPair daily_indices(const store::MeasurementStore& store, const BreakpointTable& table,
                             std::string_view station_id, Date day);

}  // namespace aqmeis::aqi
