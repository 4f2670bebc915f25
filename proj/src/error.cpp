#include "seqal/error.hpp"

#include "seqal/rng.hpp"

#include <cmath>

namespace seqal {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::InvalidTag: return "InvalidTag";
    case ErrorKind::BioViolation: return "BioViolation";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::NonFiniteScore: return "NonFiniteScore";
    case ErrorKind::EmptyLabeledSet: return "EmptyLabeledSet";
    case ErrorKind::InvalidT: return "InvalidT";
    case ErrorKind::NoValidTokens: return "NoValidTokens";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BudgetExceedsPool: return "BudgetExceedsPool";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::MissingEmbeddings: return "MissingEmbeddings";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(ErrorKind kind, std::size_t line, const std::string& message)
    : Error(kind, "line " + std::to_string(line) + ": " + message), line_(line) {}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double Rng::normal() {
  // Box-Muller; u1 is shifted away from zero.
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace seqal
