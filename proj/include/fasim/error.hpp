#pragma once

#include <stdexcept>
#include <string>

namespace fasim {

enum class ErrorCode {
  UnboundVariable,
  DomainError,
  DivideByZero,
  ParseError,
  ValidationError,
  NotStaticallyInvertible,
  StepUnderflow,
  CosineSingularity,
  InvariantViolated,
  InvalidConfig,
  ZeroVariance,
  Precondition,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Parse and validation failures carry a source position (1-based; 0 when
// the failure is not tied to a location in the text).
class ModelError : public Error {
 public:
  ModelError(ErrorCode code, const std::string& message, int line, int column)
      : Error(code, message), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace fasim
