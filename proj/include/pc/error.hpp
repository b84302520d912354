// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pc {

enum class ErrorCode {
  OutOfRange,
  BackendUnavailable,
  ContextOverflow,
  LengthMismatch,
  EmptyDemos,
  UnknownOrigin,
  ZeroNormEmbedding,
  ParseError,
  MissingGold,
  MultipleGold,
  Timeout,
  ProtocolError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyDemos: return "EmptyDemos";
    case ErrorCode::UnknownOrigin: return "UnknownOrigin";
    case ErrorCode::ZeroNormEmbedding: return "ZeroNormEmbedding";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingGold: return "MissingGold";
    case ErrorCode::MultipleGold: return "MultipleGold";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

// Single exception type for the library. `field` names the offending config
// field (OutOfRange), `line` is 1-based (ParseError / MissingGold /
// MultipleGold), `status` and `body` carry the HTTP reply (ProtocolError).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  static Error out_of_range(std::string field, const std::string& why) {
    Error e(ErrorCode::OutOfRange, field + " " + why);
    e.field_ = std::move(field);
    return e;
  }

  static Error at_line(ErrorCode code, long line, const std::string& why) {
    Error e(code, "line " + std::to_string(line) + ": " + why);
    e.line_ = line;
    return e;
  }

  static Error protocol(int status, std::string body, const std::string& why) {
    Error e(ErrorCode::ProtocolError, "status " + std::to_string(status) + ": " + why);
    e.status_ = status;
    e.body_ = std::move(body);
    return e;
  }

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  long line() const noexcept { return line_; }
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  ErrorCode code_;
  std::string field_;
  long line_ = 0;
  int status_ = 0;
  std::string body_;
};

}  // namespace pc
