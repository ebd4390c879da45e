#pragma once

#include <stdexcept>
#include <string>

namespace fpk {

enum class ErrorCode {
  NonFiniteCoefficient,
  NegativeDiffusion,
  DegenerateBox,
  InvalidGrid,
  SolverDiverged,
  StepTooLarge,
  StepFailed,
  ParticleEscaped,
  TestFunctionNotSupported,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Base of every error raised by the library. The code is stable and is what
/// the CLI maps to exit codes and what tests match on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteCoefficient: return "NonFiniteCoefficient";
    case ErrorCode::NegativeDiffusion: return "NegativeDiffusion";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::StepFailed: return "StepFailed";
    case ErrorCode::ParticleEscaped: return "ParticleEscaped";
    case ErrorCode::TestFunctionNotSupported: return "TestFunctionNotSupported";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fpk
