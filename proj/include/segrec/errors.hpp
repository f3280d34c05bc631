#pragma once

#include <stdexcept>
#include <string>

namespace segrec {

/// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV, JSONL, TOML); message carries line/row context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration, including HTTP 4xx responses (no point retrying).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network failure after the retry budget is exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Completion ended with finish_reason "length"; partial text retained.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& msg, std::string partial)
      : Error(msg), partial_text_(std::move(partial)) {}
  const std::string& partial_text() const { return partial_text_; }

 private:
  std::string partial_text_;
};

/// Internally inconsistent data (dimension mismatch, duplicate keys).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Boundary extraction cannot proceed (e.g. no alphanumeric content).
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a statistic's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace segrec
