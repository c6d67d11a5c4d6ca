#pragma once

#include <stdexcept>
#include <string>

namespace msa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or missing hyperparameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimension disagreement.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, long expected, long actual)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  long expected_;
  long actual_;
};

/// A numerical routine could not produce a result (singular system, non-finite values).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A brute-force routine was asked to run on an instance that is too large.
class TractabilityError : public Error {
 public:
  using Error::Error;
};

/// An algorithm precondition does not hold for the supplied inputs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// File-format or filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace msa
