#pragma once

#include <stdexcept>
#include <string>

namespace mcgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes incompatible with a primitive or model.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A non-finite value or an ill-posed numerical quantity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File parsing / serialization failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcgan
