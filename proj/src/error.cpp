#include "havok/error.hpp"

namespace havok {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ShortSeries: return "ShortSeries";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::AllZeroForcing: return "AllZeroForcing";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::ZeroPower: return "ZeroPower";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::NoBeats: return "NoBeats";
    case ErrorCode::GapTooLong: return "GapTooLong";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::InsufficientRecords: return "InsufficientRecords";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::RankDeficient:
    case ErrorCode::Divergence:
    case ErrorCode::ZeroVariance:
    case ErrorCode::AllZeroForcing:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::ConstantInput:
    case ErrorCode::ZeroPower:
      return ErrorCategory::Numeric;
    case ErrorCode::SeriesTooShort:
    case ErrorCode::ShortSeries:
    case ErrorCode::TooShort:
    case ErrorCode::NoBeats:
    case ErrorCode::GapTooLong:
    case ErrorCode::InsufficientRecords:
      return ErrorCategory::InsufficientData;
    default:
      return ErrorCategory::Input;
  }
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace havok
