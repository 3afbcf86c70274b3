#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oni {

enum class ErrorCode {
  ZeroMatrix,
  ZeroRow,
  NonSymmetric,
  NonConvergence,
  NonFinite,
  Divergence,
  BadGroupSize,
  ShapeMismatch,
  CacheMismatch,
  StaleCache,
  BadConfig,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  BadSpec,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::BadGroupSize: return "BadGroupSize";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::CacheMismatch: return "CacheMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oni
