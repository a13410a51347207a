#pragma once

#include <stdexcept>
#include <string>

namespace feie {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes violate an operation's shape rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input data breaks a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Run configuration is malformed or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace feie
