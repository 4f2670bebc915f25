#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqal {

enum class ErrorKind {
  MalformedLine,
  InvalidTag,
  BioViolation,
  InvalidSpec,
  IndexOutOfRange,
  NonFiniteScore,
  EmptyLabeledSet,
  InvalidT,
  NoValidTokens,
  ShapeMismatch,
  BudgetExceedsPool,
  DegenerateInput,
  MissingEmbeddings,
  ConfigInvalid,
  MissingArtifact,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures surface as this exception. what() is prefixed with
// the kind name, e.g. "BioViolation: line 3: ...".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse errors additionally carry the 1-based source line.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace seqal
