#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace manidialog {

enum class ErrorCode {
  ParseError,
  DuplicateScenario,
  InvalidScene,
  IncompleteTurn,
  GrammarError,
  MissingReply,
  TransportError,
  UnknownToken,
  EmptyMask,
  EmptyBatch,
  MaxLengthExceeded,
  ExhaustedBudget,
  PreconditionFailed,
  ScriptViolation,
  UnknownScenario,
  UnknownBackend,
  SessionNotFound,
  BackendUnavailable,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised by the action parser. `position` is a byte offset into the input.
class GrammarError : public Error {
 public:
  GrammarError(std::size_t position, std::string expected, std::string found);

  std::size_t position() const noexcept { return position_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& found() const noexcept { return found_; }

 private:
  std::size_t position_;
  std::string expected_;
  std::string found_;
};

}  // namespace manidialog
