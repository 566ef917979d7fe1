#include "manidialog/error.hpp"

namespace manidialog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateScenario: return "DuplicateScenario";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::IncompleteTurn: return "IncompleteTurn";
    case ErrorCode::GrammarError: return "GrammarError";
    case ErrorCode::MissingReply: return "MissingReply";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::MaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorCode::ExhaustedBudget: return "ExhaustedBudget";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::ScriptViolation: return "ScriptViolation";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::UnknownBackend: return "UnknownBackend";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

GrammarError::GrammarError(std::size_t position, std::string expected, std::string found)
    : Error(ErrorCode::GrammarError,
            "at position " + std::to_string(position) + ": expected " + expected + ", found " +
                (found.empty() ? std::string("end of input") : "'" + found + "'")),
      position_(position),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

}  // namespace manidialog
