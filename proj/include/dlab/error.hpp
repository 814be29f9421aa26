#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
      : Error("line " + std::to_string(line) +
              (column ? ", column " + std::to_string(column) : std::string()) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input whose values do not fit the schema (unknown enum value, unknown code).
class SchemaError : public Error {
 public:
  SchemaError(std::string dialogue_id, const std::string& message)
      : Error("dialogue '" + dialogue_id + "': " + message), dialogue_id_(std::move(dialogue_id)) {}

  const std::string& dialogue_id() const noexcept { return dialogue_id_; }

 private:
  std::string dialogue_id_;
};

/// Rejected code assignment; names the offending utterance index.
class CodingError : public Error {
 public:
  CodingError(std::size_t index, const std::string& message)
      : Error("utterance " + std::to_string(index) + ": " + message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Numerical routine called outside its domain (empty sample, zero variance, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& message, bool transient) : Error(message), transient_(transient) {}

  bool transient() const noexcept { return transient_; }

 private:
  bool transient_;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace dlab
