#pragma once

#include <stdexcept>
#include <string>

namespace kspace {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document or log line.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_ = 0;
};

/// Input that parses but violates a contract (cycles, time regressions, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Lookup of an id that does not exist.
class UnknownIdError : public Error {
public:
  using Error::Error;
};

}  // namespace kspace
