#pragma once

// JSON shapes shared by the HTTP server and the C API.

#include <map>
#include <string>

#include "aqmeis/aqi.hpp"
#include "aqmeis/forecast.hpp"
#include "aqmeis/ingest.hpp"
#include "aqmeis/registry.hpp"
#include "aqmeis/report.hpp"
#include "json.hpp"

namespace aqmeis::codec {

using nlohmann::json;
using Params = std::map<std::string, std::string, std::less<>>;

json error_body(ErrorCode code, std::string_view message);

json to_json(const geo::Station& s);
json to_json(const geo::Municipality& m);
json to_json(const geo::StationCategory& c);

geo::Station station_from_json(const json& j);
geo::StationPatch patch_from_json(const json& j);
geo::Municipality municipality_from_json(const json& j);
geo::StationCategory category_from_json(const json& j);

/// station, channels (comma list of indices), interval (05|60),
/// category (daily|weekly|monthly|custom), from, to (custom only).
report::ReportRequest report_request_from(const Params& params, Date today);
json to_json(const report::ReportTable& table, const report::Page& page);
json to_json(const std::optional<report::FieldStats>& stats);

json to_json(const aqi::DailyIndexPair& pair, const aqi::BreakpointTable& table);
json to_json(const forecast::DaySeries& series);
json to_json(const std::array<forecast::PrecipBucket, 4>& buckets);
json to_json(const ingest::IngestReport& report);

const std::string& require(const Params& params, std::string_view key);
Date date_param(const Params& params, std::string_view key);
TimePoint time_param(const Params& params, std::string_view key);
int int_param(std::string_view text, std::string_view what);
Params params_from_json(const json& j);

}  // namespace aqmeis::codec
