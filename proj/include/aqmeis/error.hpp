#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aqmeis {

/// Error taxonomy shared by every module. Values are stable; they are
/// exported unchanged through the C API and the HTTP error bodies.
enum class ErrorCode : int {
  Ok = 0,
  // measurement-store
  MisalignedTimestamp = 10,
  UnknownStation = 11,
  EmptyChannelSet = 12,
  InvertedRange = 13,
  BadChannelIndex = 14,
  // ingest-gateway
  BadHeader = 20,
  BadStatusCode = 21,
  BadTimestamp = 22,
  BadValue = 23,
  DuplicateChannel = 24,
  BadScenario = 25,
  // report-engine
  NoChannelsSelected = 30,
  NoDataForPeriod = 31,
  BadCsv = 32,
  // air-quality-index
  NegativeConcentration = 40,
  IndexOutOfScale = 41,
  BadBreakpointTable = 42,
  // geo-registry
  BadCoordinates = 50,
  UnknownMunicipality = 51,
  UnknownCategory = 52,
  EmptyTitle = 53,
  DuplicateStream = 54,
  ReferencedEntity = 55,
  // forecast-service
  UnknownLocation = 60,
  BadHour = 61,
  MissingFile = 62,
  BadFrameDate = 63,
  BadForecastFile = 64,
  // api-server
  BadCredentials = 70,
  DeniedMissing = 71,
  DeniedExpired = 72,
  DeniedInsufficient = 73,
  BadRequest = 74,
  NotFound = 75,
  // infrastructure
  ConfigError = 90,
  DataDirError = 91,
  IoError = 92,
  InvalidArgument = 98,
  Internal = 99,
};

/// Machine-readable name, e.g. "UnknownStation".
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace aqmeis
