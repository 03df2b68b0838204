#include "seqlpd/error.hpp"

namespace seqlpd {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::OrderError: return "OrderError";
    case ErrorCode::NormError: return "NormError";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidCluster: return "InvalidCluster";
    case ErrorCode::EmptySuperKeyframes: return "EmptySuperKeyframes";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NoValidTrajectory: return "NoValidTrajectory";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::EmptyDatabase: return "EmptyDatabase";
    case ErrorCode::RunLengthError: return "RunLengthError";
  }
  return "Unknown";
}

}  // namespace seqlpd
