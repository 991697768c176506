#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssvdd {

enum class ErrorKind {
  RankDeficient,
  ZeroRow,
  NotSymmetric,
  InfeasibleC,
  NotConverged,
  NoSupportVectors,
  DimensionMismatch,
  TooLarge,
  DegenerateSubspace,
  NonPositiveSigma,
  ZeroKernel,
  ParseError,
  RaggedRows,
  EmptyFile,
  UnknownClass,
  TooFewSamples,
  NoPositives,
  NoNegatives,
  IoError,
  SchemaError,
  VersionError,
  InvariantViolation,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ZeroRow: return "ZeroRow";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::InfeasibleC: return "InfeasibleC";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NoSupportVectors: return "NoSupportVectors";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DegenerateSubspace: return "DegenerateSubspace";
    case ErrorKind::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorKind::ZeroKernel: return "ZeroKernel";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::NoNegatives: return "NoNegatives";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::VersionError: return "VersionError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace ssvdd
