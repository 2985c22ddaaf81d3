#pragma once

#include <stdexcept>
#include <string>

namespace enlarge {

enum class ErrorCode {
  kInvalidSpace,
  kDimensionMismatch,
  kNotPredictable,
  kNotMartingale,
  kNoRepresentation,
  kInfeasible,
  kInvalidZ,
  kNegativeMass,
  kNonPositive,
  kRecursionMismatch,
  kConfigError,
  kInsufficientPaths,
  kGenerationFailed,
  kMissingReport,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace enlarge
