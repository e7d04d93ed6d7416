#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tlapse {

enum class ErrorCode {
  kBehindCamera,
  kNonPositiveDepth,
  kUnknownPathType,
  kEmptySelection,
  kDegenerateRange,
  kTooFewImages,
  kOutOfRange,
  kDimensionMismatch,
  kNoObservations,
  kUnderConstrained,
  kInvalidSpec,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  Error(ErrorCode code, const std::string& message, Verbatim);

 private:
  ErrorCode code_;
};

// Raised by the pipeline orchestrator; carries the name of the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace tlapse
