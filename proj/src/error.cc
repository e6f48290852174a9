#include "ellipsoid_cp/error.h"

namespace ellipsoid_cp {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFewerThanTwoSamples: return "FewerThanTwoSamples";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAllEigenvaluesBelowThreshold: return "AllEigenvaluesBelowThreshold";
    case ErrorCode::kInvertedRadii: return "InvertedRadii";
    case ErrorCode::kSeriesTooShort: return "SeriesTooShort";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kNotFitted: return "NotFitted";
    case ErrorCode::kEmptyBuffer: return "EmptyBuffer";
    case ErrorCode::kMisalignedHistory: return "MisalignedHistory";
    case ErrorCode::kTooFewNeighbors: return "TooFewNeighbors";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::kTooFewScores: return "TooFewScores";
    case ErrorCode::kWindowMismatch: return "WindowMismatch";
    case ErrorCode::kNotWarm: return "NotWarm";
    case ErrorCode::kDegenerateHull: return "DegenerateHull";
    case ErrorCode::kDimensionTooHigh: return "DimensionTooHigh";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kEmptyAfterDrop: return "EmptyAfterDrop";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kEmptyReports: return "EmptyReports";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ellipsoid_cp
