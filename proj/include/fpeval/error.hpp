#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpeval {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data (templates, images, manifests) is malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Template or manifest text could not be parsed. Carries the 1-based line.
class ParseError : public DataError {
 public:
  enum class Kind { kMalformedHeader, kMalformedLine, kCountMismatch, kOutOfBounds, kIo };

  ParseError(Kind kind, std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), kind_(kind), line_(line), detail_(what) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::string detail_;
};

/// An external system under test misbehaved beyond the tolerated rate.
class ExternalSystemError : public Error {
 public:
  using Error::Error;
};

}  // namespace fpeval
