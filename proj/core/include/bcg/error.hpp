#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bcg {

enum class ErrorCode {
  ShapeMismatch,
  DtypeMismatch,
  NonSquare,
  Singular,
  InvalidValue,
  DuplicateName,
  UnknownName,
  UnbalancedFunction,
  NestedFunction,
  NoOpenFunction,
  MalformedIR,
  UnsupportedInstr,
  SymbolicCondition,
  InvalidParameter,
  ParseError,
  ArityViolation,
  Conflict,
  Undetermined,
  AlgebraicLoop,
  UnboundName,
  DivisionByZero,
  IndexOutOfRange,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bcg
