#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace effrec {

/// Closed set of failure classes reported by every component and the CLI.
enum class ErrorCode {
  UnboundVariable,
  KindMismatch,
  NotArrow,
  NotForall,
  ArgMismatch,
  ImpureTypeAbstraction,
  UnannotatedLambda,
  PreconditionViolated,
  OccursCheck,
  NotMonotype,
  Mismatch,
  UnifyFailed,
  EscapingVariable,
  ResidualUnifVar,
  BoundExceeded,
  SyntaxError,
  UnifVarInSource,
  MalformedDirective,
  IoError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::NotArrow: return "NotArrow";
    case ErrorCode::NotForall: return "NotForall";
    case ErrorCode::ArgMismatch: return "ArgMismatch";
    case ErrorCode::ImpureTypeAbstraction: return "ImpureTypeAbstraction";
    case ErrorCode::UnannotatedLambda: return "UnannotatedLambda";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::OccursCheck: return "OccursCheck";
    case ErrorCode::NotMonotype: return "NotMonotype";
    case ErrorCode::Mismatch: return "Mismatch";
    case ErrorCode::UnifyFailed: return "UnifyFailed";
    case ErrorCode::EscapingVariable: return "EscapingVariable";
    case ErrorCode::ResidualUnifVar: return "ResidualUnifVar";
    case ErrorCode::BoundExceeded: return "BoundExceeded";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnifVarInSource: return "UnifVarInSource";
    case ErrorCode::MalformedDirective: return "MalformedDirective";
    case ErrorCode::IoError: return "IoError";
  }
  return "?";
}

inline std::optional<ErrorCode> error_code_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == s) return code;
  }
  return std::nullopt;
}

/// Every failure in the library is thrown as an Error. `reason` refines
/// UnifyFailed with the unifier's own code; `evidence` holds rendered
/// descriptors (e.g. the two sides of a mismatch).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::vector<std::string> evidence = {},
        std::optional<ErrorCode> reason = std::nullopt)
      : std::runtime_error(std::move(message)),
        code_(code),
        reason_(reason),
        evidence_(std::move(evidence)) {}

  ErrorCode code() const { return code_; }
  std::optional<ErrorCode> reason() const { return reason_; }
  const std::vector<std::string>& evidence() const { return evidence_; }

  /// Either the code itself or, for UnifyFailed, the underlying reason.
  bool is(ErrorCode c) const { return code_ == c || reason_ == c; }

  /// "UnifyFailed(NotMonotype)" or plain "NotArrow".
  std::string class_name() const {
    std::string out(to_string(code_));
    if (reason_) {
      out += "(";
      out += to_string(*reason_);
      out += ")";
    }
    return out;
  }

 private:
  ErrorCode code_;
  std::optional<ErrorCode> reason_;
  std::vector<std::string> evidence_;
};

}  // namespace effrec
