#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace fpclean {

enum class ErrorCode {
  InvalidInput,
  DegenerateComponent,
  NodeNotInComponent,
  EndpointUnavailable,
  ProtocolViolation,
  FinetuneUnsupported,
  NotPending,
  InsufficientSeries,
  SafetyLimitExceeded,
  ReplayDivergence,
  Interrupted,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` carries the failure class
/// so callers (the CLI in particular) can map it to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// ProtocolViolation keeps the offending wire payload for diagnostics.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& message, std::string raw)
      : Error(ErrorCode::ProtocolViolation, message), raw_(std::move(raw)) {}

  const std::string& raw_payload() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace fpclean
