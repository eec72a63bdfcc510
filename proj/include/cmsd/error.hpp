#pragma once

#include <stdexcept>
#include <string>

namespace cmsd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad grid parameters, unparsable expressions, malformed config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An argument left the set where an operation is defined (e.g. r(φ(0)) ∉ [0,h]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A Newton-type iteration did not reach its tolerance.
class NonconvergenceError : public Error {
 public:
  using Error::Error;
};

/// A homological (Sylvester) operator is singular to working precision.
class ResonanceError : public Error {
 public:
  using Error::Error;
};

/// The linearization has no eigenvalues on the imaginary axis.
class NoCenterError : public Error {
 public:
  using Error::Error;
};

/// Any other failure of a numerical step (defective spectrum, inconsistent routes, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmsd
