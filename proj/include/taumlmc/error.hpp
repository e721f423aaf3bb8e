#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taumlmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The derived time-scale exponent gamma is positive.
class UnsupportedScaling : public Error {
 public:
  using Error::Error;
};

class InvalidMean : public Error {
 public:
  using Error::Error;
};

class InvalidRate : public Error {
 public:
  using Error::Error;
};

/// t_end is not an integer multiple of the step size.
class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class EventBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A copy number left the 64-bit range.
class StateOverflow : public Error {
 public:
  using Error::Error;
};

class ScheduleOverflow : public Error {
 public:
  using Error::Error;
};

class DegeneratePilot : public Error {
 public:
  using Error::Error;
};

class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// Model text could not be parsed. Carries the 1-based position of the problem.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnknownSpecies : public ParseError {
 public:
  using ParseError::ParseError;
};

class DuplicateSpecies : public ParseError {
 public:
  using ParseError::ParseError;
};

class NonPositiveRate : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace taumlmc
