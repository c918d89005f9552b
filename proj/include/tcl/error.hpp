#pragma once

#include <stdexcept>
#include <string>

namespace tcl {

enum class ErrorKind {
  NonPositiveRate,
  InvalidGenerator,
  InvalidParams,
  InvalidSetPoint,
  SingularSystem,
  UnsortedInput,
  NotADistribution,
  NonPositiveWeight,
  NoConvergence,
  MissingOccupation,
  EmptySamples,
  NoCoalescence,
  UnstableScheme,
  InvalidConfig,
};

const char* to_string(ErrorKind kind) noexcept;

/// Error raised by every module; `kind()` carries the failure class so
/// callers (the CLI in particular) can report it by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tcl
