#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eqml {

enum class ErrorCode {
  InvalidDims,
  DimMismatch,
  NormZero,
  QubitOutOfRange,
  SameQubit,
  TooLarge,
  LabelOutOfRange,
  EmptyDataset,
  ZeroWeights,
  InvalidArgs,
  BadMagic,
  ChecksumMismatch,
  UnsupportedVersion,
  MissingBaseline,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::NormZero: return "NormZero";
    case ErrorCode::QubitOutOfRange: return "QubitOutOfRange";
    case ErrorCode::SameQubit: return "SameQubit";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ZeroWeights: return "ZeroWeights";
    case ErrorCode::InvalidArgs: return "InvalidArgs";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace eqml
