#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace angularpu {

enum class ErrorCode {
  DegenerateVector,
  DimensionMismatch,
  InvalidDimension,
  InvalidConcentration,
  NumericOverflow,
  DegenerateThreshold,
  DegenerateResultant,
  EmptyBatch,
  BatchTooSmall,
  DegenerateEmbedding,
  StaleCache,
  DegeneratePrototype,
  InvalidSpec,
  ShapeMismatch,
  InsufficientData,
  InsufficientPositives,
  IoFailure,
  FormatViolation,
  NoPositives,
  SingleClass,
  NumericAbort,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace angularpu
