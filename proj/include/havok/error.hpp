#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace havok {

enum class ErrorCode {
  SeriesTooShort,
  NonFinite,
  InvalidArgument,
  ConvergenceFailure,
  InvalidRank,
  RankDeficient,
  ShortSeries,
  Divergence,
  ZeroVariance,
  AllZeroForcing,
  DegenerateVariance,
  ConstantInput,
  ZeroPower,
  TooShort,
  WindowOutOfRange,
  InvalidBand,
  NoBeats,
  GapTooLong,
  OverlapError,
  InsufficientRecords,
  ParseError,
  IoError,
};

// Broad failure class; the CLI maps these onto process exit codes.
enum class ErrorCategory { Input, Numeric, InsufficientData };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace havok
