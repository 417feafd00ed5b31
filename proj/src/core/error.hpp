#pragma once

#include <stdexcept>
#include <string>

namespace mf {

// Base class for all library errors. Subclasses exist so the C API and the
// CLI can map failures onto stable status codes.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed text input (expression strings, corpus files, JSON).
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t position)
      : Error(msg + " (at position " + std::to_string(position) + ")"),
        pos(position) {}
  explicit ParseError(const std::string& msg) : Error(msg), pos(0) {}
  std::size_t pos;
};

// Well-formed input that violates a semantic rule (unassigned variable,
// duplicate assignment).
struct SemanticError : Error {
  using Error::Error;
};

// Tensor shape disagreement.
struct ShapeError : Error {
  using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  using Error::Error;
};

// API contract violations (non-scalar loss, fully masked attention row, ...).
struct ContractError : Error {
  using Error::Error;
};

// Requested sample count exceeds the combinatorial capacity of a config.
struct CapacityError : Error {
  using Error::Error;
};

// Character outside the vocabulary.
struct VocabError : Error {
  using Error::Error;
};

// Integer id outside its table (embedding rows, vocabulary size).
struct IndexError : Error {
  using Error::Error;
};

// Sequence longer than the configured maximum.
struct LengthError : Error {
  using Error::Error;
};

// Obfuscation map does not cover a character that appears in the corpus.
struct CoverageError : Error {
  using Error::Error;
};

// Bad or inconsistent configuration (unknown JSON key, invalid field).
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failures; message carries the path.
struct IoError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  DivergenceError(const std::string& msg, long long at_step)
      : Error(msg + " (step " + std::to_string(at_step) + ")"), step(at_step) {}
  long long step;
};

}  // namespace mf
