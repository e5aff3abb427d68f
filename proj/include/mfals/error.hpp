#pragma once

#include <stdexcept>
#include <string>

namespace mfals {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise malformed input data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Covariance factorization failed even after jitter escalation.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// A model reported that it could not produce a value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// An external adapter violated the line protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// An external adapter process exited or died.
class AdapterCrashError : public Error {
 public:
  using Error::Error;
};

/// A model returned different outputs for identical inputs.
class DeterminismError : public Error {
 public:
  using Error::Error;
};

/// Run specification failed schema validation.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfals
