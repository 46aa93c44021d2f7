#include "fasim/error.hpp"

namespace fasim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DivideByZero: return "DivideByZero";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::NotStaticallyInvertible: return "NotStaticallyInvertible";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::CosineSingularity: return "CosineSingularity";
    case ErrorCode::InvariantViolated: return "InvariantViolated";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::Precondition: return "Precondition";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace fasim
