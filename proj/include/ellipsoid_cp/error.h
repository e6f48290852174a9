#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ellipsoid_cp {

enum class ErrorCode {
  kInvalidArgument,
  kFewerThanTwoSamples,
  kDimensionMismatch,
  kAllEigenvaluesBelowThreshold,
  kInvertedRadii,
  kSeriesTooShort,
  kSingularSystem,
  kNotFitted,
  kEmptyBuffer,
  kMisalignedHistory,
  kTooFewNeighbors,
  kEmptyInput,
  kLevelOutOfRange,
  kTooFewScores,
  kWindowMismatch,
  kNotWarm,
  kDegenerateHull,
  kDimensionTooHigh,
  kFileNotFound,
  kNonNumericCell,
  kEmptyAfterDrop,
  kMissingColumn,
  kEmptyReports,
  kConfigError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception type; the code
// identifies which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Fail(ErrorCode code, const std::string& message);

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace ellipsoid_cp
