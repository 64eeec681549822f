#pragma once

#include <stdexcept>
#include <string>

namespace vipa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function argument or type invariant was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Geometry outside the validity of the VIPA model (e.g. too few or too many virtual sources).
class InvalidLayoutError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// A design target cannot be met. `constraint()` names the violated constraint.
class InfeasibleDesignError : public Error {
 public:
  InfeasibleDesignError(std::string constraint, const std::string& what)
      : Error(constraint + ": " + what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class DegenerateProfileError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed external input (event files, config values). Carries the 1-based line when known.
class MalformedInputError : public Error {
 public:
  explicit MalformedInputError(const std::string& what, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Probability model evaluated outside its linear single-photon regime.
class InvalidRegimeError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace vipa
