#pragma once

#include <stdexcept>
#include <string>

namespace causalvar {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimension mismatch, bad index, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A model that must be stable is not.
class NonStationaryError : public InvalidInput {
 public:
  NonStationaryError(const std::string& what, double maxModulus)
      : InvalidInput(what), maxModulus_(maxModulus) {}
  double maxModulus() const noexcept { return maxModulus_; }

 private:
  double maxModulus_;
};

/// Solver failure, loss of precision, or exhausted iteration budget.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Bialternant evaluation refused: the spectrum has (nearly) repeated roots.
class DegenerateSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace causalvar
