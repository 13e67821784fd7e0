#pragma once

#include <stdexcept>
#include <string>

namespace hetknock {

enum class ErrorCode {
  ShapeMismatch,
  NonFiniteValue,
  TooFewRows,
  BadFraction,
  EmptyColumn,
  ZeroVariance,
  LengthMismatch,
  EmptyGrid,
  DegenerateVariance,
  BadRho,
  ShortRow,
  CholeskyFailure,
  BadLevel,
  BadArgument,
  ParseError,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::BadFraction: return "BadFraction";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::BadRho: return "BadRho";
    case ErrorCode::ShortRow: return "ShortRow";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::BadLevel: return "BadLevel";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace hetknock
