#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vbcar {

/// Broad failure categories. The CLI maps each to its own exit code.
enum class ErrorKind {
  invalid_argument,
  parse,
  over_filtering,
  insufficient_data,
  sampling,
  numerical,
  degenerate,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed delimited input; `line()` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace vbcar
