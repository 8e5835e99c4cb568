#include "aqmeis/error.hpp"

namespace aqmeis {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::MisalignedTimestamp: return "MisalignedTimestamp";
    case ErrorCode::UnknownStation: return "UnknownStation";
    case ErrorCode::EmptyChannelSet: return "EmptyChannelSet";
    case ErrorCode::InvertedRange: return "InvertedRange";
    case ErrorCode::BadChannelIndex: return "BadChannelIndex";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::BadStatusCode: return "BadStatusCode";
    case ErrorCode::BadTimestamp: return "BadTimestamp";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::DuplicateChannel: return "DuplicateChannel";
    case ErrorCode::BadScenario: return "BadScenario";
    case ErrorCode::NoChannelsSelected: return "NoChannelsSelected";
    case ErrorCode::NoDataForPeriod: return "NoDataForPeriod";
    case ErrorCode::BadCsv: return "BadCsv";
    case ErrorCode::NegativeConcentration: return "NegativeConcentration";
    case ErrorCode::IndexOutOfScale: return "IndexOutOfScale";
    case ErrorCode::BadBreakpointTable: return "BadBreakpointTable";
    case ErrorCode::BadCoordinates: return "BadCoordinates";
    case ErrorCode::UnknownMunicipality: return "UnknownMunicipality";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptyTitle: return "EmptyTitle";
    case ErrorCode::DuplicateStream: return "DuplicateStream";
    case ErrorCode::ReferencedEntity: return "ReferencedEntity";
    case ErrorCode::UnknownLocation: return "UnknownLocation";
    case ErrorCode::BadHour: return "BadHour";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::BadFrameDate: return "BadFrameDate";
    case ErrorCode::BadForecastFile: return "BadForecastFile";
    case ErrorCode::BadCredentials: return "BadCredentials";
    case ErrorCode::DeniedMissing: return "DeniedMissing";
    case ErrorCode::DeniedExpired: return "DeniedExpired";
    case ErrorCode::DeniedInsufficient: return "DeniedInsufficient";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataDirError: return "DataDirError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace aqmeis
