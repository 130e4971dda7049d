#include "angularpu/error.hpp"

namespace angularpu {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidConcentration: return "InvalidConcentration";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::DegenerateThreshold: return "DegenerateThreshold";
    case ErrorCode::DegenerateResultant: return "DegenerateResultant";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::DegeneratePrototype: return "DegeneratePrototype";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientPositives: return "InsufficientPositives";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::FormatViolation: return "FormatViolation";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NumericAbort: return "NumericAbort";
  }
  return "Unknown";
}

}  // namespace angularpu
