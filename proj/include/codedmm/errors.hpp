#pragma once

#include <stdexcept>
#include <string>

namespace codedmm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A divisibility constraint between system parameters does not hold.
class DivisibilityError : public Error {
public:
  using Error::Error;
};

/// A parameter lies outside its admissible range.
class RangeError : public Error {
public:
  using Error::Error;
};

class SingularMatrix : public Error {
public:
  using Error::Error;
};

class FieldTooSmall : public Error {
public:
  using Error::Error;
};

class PartitionLimitExceeded : public Error {
public:
  using Error::Error;
};

/// Raised when an exhaustive computation would exceed its configured budget
/// (subset enumeration, solver nodes, cache cells).
class BudgetExceeded : public Error {
public:
  using Error::Error;
};

/// No LT code design meets the requested failure target.
class Infeasible : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration; `field()` names the
/// offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string field, const std::string &what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

} // namespace codedmm
