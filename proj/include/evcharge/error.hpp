#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evcharge {

enum class ErrorCode {
  kEmptyInstance,
  kTheoremPrecondition,
  kInvalidConfig,
  kParseError,
  kIoError,
  kPriceExceedsPmax,
  kPriceBelowL,
  kCapacityExceeded,
  kInfeasibleCandidate,
  kTooLarge,
  kParamsMismatch,
  kInconsistentOutcome,
  kQuantizationError,
  kNoTrace,
  kWrongClassification,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures carry the 1-based data row and column of the offending cell.
class ParseError : public Error {
 public:
  ParseError(int row, int column, const std::string& message)
      : Error(ErrorCode::kParseError, "row " + std::to_string(row) + ", col " +
                                          std::to_string(column) + ": " +
                                          message),
        row_(row),
        column_(column) {}

  int row() const noexcept { return row_; }
  int column() const noexcept { return column_; }

 private:
  int row_;
  int column_;
};

}  // namespace evcharge
