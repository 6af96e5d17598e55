#pragma once

#include <stdexcept>
#include <string>

namespace mfish {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (PGM header, model file, config file).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training data does not cover every class with enough samples.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure, e.g. a covariance that is not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfish
