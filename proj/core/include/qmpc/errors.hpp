#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmpc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivisionByZero : public Error {
 public:
  DivisionByZero() : Error("division by zero in prime field") {}
};

class FieldMismatch : public Error {
 public:
  FieldMismatch() : Error("operands belong to different prime fields") {}
};

class DuplicateAbscissa : public Error {
 public:
  DuplicateAbscissa() : Error("interpolation points share an abscissa") {}
};

class TooFewRecipients : public Error {
 public:
  using Error::Error;
};

class DecodingFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line), detail_(what), path_(path) {}
  std::size_t line() const { return line_; }
  const std::string& detail() const { return detail_; }
  const std::string& path() const { return path_; }

 private:
  std::size_t line_;
  std::string detail_;
  std::string path_;
};

class CycleDetected : public Error {
 public:
  using Error::Error;
};

class FanInExceeded : public Error {
 public:
  using Error::Error;
};

class FormationFailure : public Error {
 public:
  using Error::Error;
};

class RoundBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class ThresholdViolated : public Error {
 public:
  using Error::Error;
};

class MismatchedRoleSets : public Error {
 public:
  MismatchedRoleSets() : Error("share lists are held by different role sets") {}
};

class NoMajority : public Error {
 public:
  using Error::Error;
};

class StrategyAfterStart : public Error {
 public:
  StrategyAfterStart() : Error("adversary attached after the first round was delivered") {}
};

class SpoofAttempt : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmpc
