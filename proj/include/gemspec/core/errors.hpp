#pragma once

#include <stdexcept>
#include <string>

namespace gemspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (bad units, missing fields, values out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A physical precondition was violated (detuning outside the memory band, grid too small, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class BandwidthError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class ExtentError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Estimation could not produce a result (fit failure, degenerate data, insufficient points).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace gemspec
