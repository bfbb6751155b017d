#pragma once

#include <stdexcept>
#include <string>

namespace goodhart {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid parameter or argument outside an operation's domain.
struct DomainError : Error {
  using Error::Error;
};

struct MomentDoesNotExist : Error {
  using Error::Error;
};

struct QuadratureFailure : Error {
  using Error::Error;
};

struct BracketFailure : Error {
  using Error::Error;
};

// Malformed or inconsistent user configuration.
struct ConfigError : Error {
  using Error::Error;
};

struct MissingStdErrors : Error {
  using Error::Error;
};

struct InsufficientSweep : Error {
  using Error::Error;
};

}  // namespace goodhart
