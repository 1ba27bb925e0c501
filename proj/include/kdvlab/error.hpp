#pragma once

#include <stdexcept>
#include <string>

namespace kdvlab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed fields, inconsistent truncations, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator could not meet its tolerance (typically at huge |lambda|).
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double lambda)
      : Error(what), lambda_(lambda) {}
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

/// A spectral computation produced an inconsistent result (missed roots,
/// interlacing violations, unresolved tails).
class SpectrumError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined at the given point (log of a nonpositive number,
/// angle of a vanishing mode pair, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Time integration exceeded its norm ceiling or produced non-finite values.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace kdvlab
