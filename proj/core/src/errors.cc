#include "tlapse/errors.h"

namespace tlapse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kUnknownPathType: return "UnknownPathType";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kDegenerateRange: return "DegenerateRange";
    case ErrorCode::kTooFewImages: return "TooFewImages";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoObservations: return "NoObservations";
    case ErrorCode::kUnderConstrained: return "UnderConstrained";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

Error::Error(ErrorCode code, const std::string& message, Verbatim)
    : std::runtime_error(message), code_(code) {}

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "[" + stage + "] " + cause.what(), Verbatim{}),
      stage_(std::move(stage)) {}

}  // namespace tlapse
