#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compgrid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBoardError : public Error {
 public:
  using Error::Error;
};

class InvalidActionError : public Error {
 public:
  using Error::Error;
};

class EpisodeFinishedError : public Error {
 public:
  using Error::Error;
};

/// Tensor or layer dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became NaN/Inf during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling exhausted its retry budget.
class RetryCapError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed line-record input. Carries the 1-based line and the offending field.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace compgrid
