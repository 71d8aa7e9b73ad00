#pragma once

#include <stdexcept>
#include <string>

namespace spde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model or operation parameters outside their admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (e.g. t <= 0 for p_t).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not reach its accuracy target.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

/// Operands do not share a grid / replica layout.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Requested allocation exceeds the configured memory budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Ensemble contains non-finite values or non-finite moment estimates.
class InvalidEnsembleError : public Error {
 public:
  using Error::Error;
};

/// Configuration could not be parsed; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spde
