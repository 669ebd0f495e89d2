#pragma once

#include <stdexcept>
#include <string>

namespace bifrank {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid schedule, solver or problem configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation precondition (shape mismatch, bad step size).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared in an iterate, gradient or input.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The problem does not expose the requested capability (e.g. exact gradients).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace bifrank
