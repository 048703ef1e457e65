#pragma once

#include <stdexcept>
#include <string>

namespace keyminer {

// Base for every failure the engine reports as a domain error. The CLI maps
// these to exit status 1 and the service maps them to 4xx responses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}

  // 1-based physical line number in the input, 0 when not line-specific.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// All candidate rows are identical on the independent columns.
class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

class ReplayDivergence : public Error {
 public:
  using Error::Error;
};

class HashMismatch : public Error {
 public:
  using Error::Error;
};

class SessionError : public Error {
 public:
  using Error::Error;
};

class NoPrecedent : public Error {
 public:
  using Error::Error;
};

}  // namespace keyminer
