#pragma once

#include <stdexcept>
#include <string>

namespace resist {

// Base of every error thrown by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatch, empty chain, non-finite data.
class InputError : public Error {
 public:
  using Error::Error;
};

// Problem or experiment configuration violates a documented constraint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Requested combination exists in principle but is not implemented (e.g. q != 2 prox).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_gap)
      : Error(what), last_gap_(last_gap) {}
  double last_gap() const noexcept { return last_gap_; }

 private:
  double last_gap_;
};

class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace resist
