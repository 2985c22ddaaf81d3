#include "enlarge/error.hpp"
#include "enlarge/scalar.hpp"

#include <cstdio>

namespace enlarge {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpace: return "InvalidSpace";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotPredictable: return "NotPredictable";
    case ErrorCode::kNotMartingale: return "NotMartingale";
    case ErrorCode::kNoRepresentation: return "NoRepresentation";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kInvalidZ: return "InvalidZ";
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kNonPositive: return "NonPositive";
    case ErrorCode::kRecursionMismatch: return "RecursionMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kInsufficientPaths: return "InsufficientPaths";
    case ErrorCode::kGenerationFailed: return "GenerationFailed";
    case ErrorCode::kMissingReport: return "MissingReport";
  }
  return "Unknown";
}

std::string ScalarTraits<double>::to_string(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace enlarge
