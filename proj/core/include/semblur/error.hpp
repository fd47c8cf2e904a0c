#pragma once

#include <stdexcept>
#include <string>

namespace semblur {

enum class ErrorCode {
  ConfigError,
  AllDocsEmpty,
  EmptyMatrix,
  MalformedLine,
  EmptyIntersection,
  ZeroVector,
  UncoveredTerm,
  DimensionMismatch,
  NoConvergence,
  RankDeficient,
  EmptyCluster,
  Collapse,
  NoLabeledDocs,
  CorpusMismatch,
  IoError,
};

// Single exception type for the whole library; the code identifies the
// failure class so callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::AllDocsEmpty: return "AllDocsEmpty";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::UncoveredTerm: return "UncoveredTerm";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::Collapse: return "Collapse";
    case ErrorCode::NoLabeledDocs: return "NoLabeledDocs";
    case ErrorCode::CorpusMismatch: return "CorpusMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace semblur
