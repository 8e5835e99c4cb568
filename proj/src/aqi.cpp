#include "aqmeis/aqi.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

namespace aqmeis::aqi {

BreakpointTable BreakpointTable::default_pm10() {
  BreakpointTable t;
  for (int k = 1; k < kBands; ++k) t.thresholds.push_back(20.0 * k);
  t.colors = {"#009966", "#33b34d", "#66cc33", "#99dd22", "#ccee11",
              "#ffde33", "#ffb020", "#ff8c1a", "#f04020", "#cc0033"};
  return t;
}

void BreakpointTable::validate() const {
  if (pollutant.empty()) fail(ErrorCode::BadBreakpointTable, "pollutant name is empty");
  if (thresholds.size() != kBands - 1)
    fail(ErrorCode::BadBreakpointTable, "expected 9 thresholds, got " + std::to_string(thresholds.size()));
  if (colors.size() != kBands)
    fail(ErrorCode::BadBreakpointTable, "expected 10 colors, got " + std::to_string(colors.size()));
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i]) || thresholds[i] < 0)
      fail(ErrorCode::BadBreakpointTable, "thresholds must be finite and non-negative");
    if (i > 0 && thresholds[i] <= thresholds[i - 1])
      fail(ErrorCode::BadBreakpointTable, "thresholds must be strictly ascending");
  }
  static const std::regex hex(R"(^#[0-9a-fA-F]{6}$)");
  std::set<std::string> distinct;
  for (const auto& c : colors) {
    if (!std::regex_match(c, hex)) fail(ErrorCode::BadBreakpointTable, "bad color '" + c + "'");
    std::string lower = c;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    distinct.insert(lower);
  }
  if (distinct.size() != colors.size()) fail(ErrorCode::BadBreakpointTable, "colors must be distinct");
}

int compute_index(const BreakpointTable& table, double daily_mean) {
  if (!(daily_mean >= 0.0))
    fail(ErrorCode::NegativeConcentration, "concentration must be >= 0");
  // upper_bound: first threshold strictly above the mean
  auto above = std::upper_bound(table.thresholds.begin(), table.thresholds.end(), daily_mean);
  const int index = 1 + static_cast<int>(above - table.thresholds.begin());
  return std::min(index, kBands);
}

const std::string& index_color(const BreakpointTable& table, int index) {
  if (index < 1 || index > static_cast<int>(table.colors.size()))
    fail(ErrorCode::IndexOutOfScale, "index " + std::to_string(index) + " outside 1..10");
  return table.colors[static_cast<std::size_t>(index - 1)];
}

std::optional<int> daily_index(const store::MeasurementStore& store, const BreakpointTable& table,
                               std::string_view station_id, Date day) {
  if (!store.is_known(station_id)) fail(ErrorCode::UnknownStation, std::string(station_id));
  auto channel = store.channels().index_by_name(station_id, table.pollutant);
  if (!channel) return std::nullopt;

  const std::vector<int> wanted{*channel};
  auto records = store.query_range({std::string(station_id), store::Interval::SixtyMin}, start_of(day),
                                   start_of(day) + std::chrono::hours{23}, wanted);
  double sum = 0;
  long n = 0;
  for (const auto& r : records) {
    const auto& reading = r.channels.at(*channel);
    if (reading.usable()) sum += reading.value, ++n;
  }
  if (n == 0) return std::nullopt;
  // negative means (sensor offset drift) are clamped to zero
  return compute_index(table, std::max(0.0, sum / static_cast<double>(n)));
}

DailyIndexPair daily_indices(const store::MeasurementStore& store, const BreakpointTable& table,
                             std::string_view station_id, Date day) {
  DailyIndexPair pair{std::string(station_id), day, {}, {}};
  pair.current = daily_index(store, table, station_id, day);
  pair.previous = daily_index(store, table, station_id, day - std::chrono::days{1});
  return pair;
}

}  // namespace aqmeis::aqi
