#pragma once

#include <stdexcept>
#include <string>

namespace scd {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration (missing binding energy, bad key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A composition does not fit the declared key bit-fields or configured limits.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was broken (negative population, R_tot drift beyond
/// recovery). Always an engine bug or a numerically unusable configuration.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Corrupt, truncated or version-mismatched checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace scd
