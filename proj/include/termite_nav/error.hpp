#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace termite_nav {

enum class ErrorCode {
  MalformedFormat,
  OutOfRangeDepth,
  EmptyImage,
  OutOfRange,
  IndexOutOfBounds,
  UnknownCatValue,
  DimensionMismatch,
  PointOutsideGrid,
  DegenerateEndpoints,
  EmptySwathe,
  StartNotNavigable,
  GoalNotNavigable,
  NoPath,
  InvalidConfig,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFormat: return "MalformedFormat";
    case ErrorCode::OutOfRangeDepth: return "OutOfRangeDepth";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::UnknownCatValue: return "UnknownCatValue";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PointOutsideGrid: return "PointOutsideGrid";
    case ErrorCode::DegenerateEndpoints: return "DegenerateEndpoints";
    case ErrorCode::EmptySwathe: return "EmptySwathe";
    case ErrorCode::StartNotNavigable: return "StartNotNavigable";
    case ErrorCode::GoalNotNavigable: return "GoalNotNavigable";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for failures that mean "the world has no answer" rather than bad input.
inline bool is_domain_failure(ErrorCode code) {
  return code == ErrorCode::StartNotNavigable || code == ErrorCode::GoalNotNavigable ||
         code == ErrorCode::NoPath;
}

}  // namespace termite_nav
