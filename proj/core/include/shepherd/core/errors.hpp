#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shepherd {

/// Index or length outside the valid range of a sequence.
class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid configuration, parameters, or preconditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A persisted file does not match the expected schema or version.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Upstream model call failed. `retryable()` is false for client errors
/// (4xx) that a retry cannot fix.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int attempts, bool retryable)
      : std::runtime_error(what), attempts_(attempts), retryable_(retryable) {}

  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int attempts_;
  bool retryable_;
};

}  // namespace shepherd
