#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bcl {

enum class ErrorCode {
  // protocol-model
  ParseError,
  UnknownKind,
  UnknownUnit,
  TypeMismatch,
  InvalidRepeat,
  UnknownField,
  // protocol-transform
  MissingCapacity,
  ZeroCurrent,
  MissingContextTerm,
  InvalidProtocol,
  // simulator
  InvalidModel,
  InvalidConfig,
  SingularHold,
  UnknownBlock,
  NoDischarge,
  // semantic
  IncompleteContext,
  BadIri,
  MissingId,
  MissingField,
  BadCapacity,
  BadVoltageWindow,
  AmbiguousSubject,
  ConflictingField,
  // graphstore
  SyntaxError,
  UnknownPrefix,
  UnboundFilter,
  UnboundVariable,
  // corpus-link
  DuplicateDocument,
  AliasCollision,
  UnknownCell,
  EmptyPhrase,
  // plumbing
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::UnknownUnit: return "UnknownUnit";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::InvalidRepeat: return "InvalidRepeat";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::MissingCapacity: return "MissingCapacity";
    case ErrorCode::ZeroCurrent: return "ZeroCurrent";
    case ErrorCode::MissingContextTerm: return "MissingContextTerm";
    case ErrorCode::InvalidProtocol: return "InvalidProtocol";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingularHold: return "SingularHold";
    case ErrorCode::UnknownBlock: return "UnknownBlock";
    case ErrorCode::NoDischarge: return "NoDischarge";
    case ErrorCode::IncompleteContext: return "IncompleteContext";
    case ErrorCode::BadIri: return "BadIri";
    case ErrorCode::MissingId: return "MissingId";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::BadCapacity: return "BadCapacity";
    case ErrorCode::BadVoltageWindow: return "BadVoltageWindow";
    case ErrorCode::AmbiguousSubject: return "AmbiguousSubject";
    case ErrorCode::ConflictingField: return "ConflictingField";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownPrefix: return "UnknownPrefix";
    case ErrorCode::UnboundFilter: return "UnboundFilter";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::DuplicateDocument: return "DuplicateDocument";
    case ErrorCode::AliasCollision: return "AliasCollision";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::EmptyPhrase: return "EmptyPhrase";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the toolkit. The code identifies the failure
/// class; the message carries the detail (offending term, path, position).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure with a byte offset into the input (JSON documents) or a
/// line/column pair (query text). Unknown coordinates are 0.
class ParseFailure : public Error {
 public:
  ParseFailure(ErrorCode code, const std::string& message, std::size_t position,
               std::size_t line = 0, std::size_t column = 0)
      : Error(code, message), position_(position), line_(line), column_(column) {}

  std::size_t position() const noexcept { return position_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t position_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace bcl
