#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqlpd {

enum class ErrorCode {
  IoError,
  FormatError,
  EmptyInput,
  LengthMismatch,
  EmptyIndex,
  ShapeError,
  OrderError,
  NormError,
  DimensionError,
  InvalidK,
  InvalidParams,
  InvalidCluster,
  EmptySuperKeyframes,
  OutOfBounds,
  WindowTooLarge,
  NoValidTrajectory,
  InsufficientHistory,
  EmptyDatabase,
  RunLengthError,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this type. what() carries the
// detail only; the code is available separately for the CLI "E:<code>:" line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seqlpd
