#pragma once

#include <stdexcept>
#include <string>

namespace wrinkle {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, flags, or arguments supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, unwritable, or malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Classifier or metric backend failures: unreachable servers, malformed
/// responses, probability vectors that fail validation.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Raised when a caller asks for an oracle query after the budget is spent.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// Internal consistency failures (dimension mismatches, broken invariants).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace wrinkle
