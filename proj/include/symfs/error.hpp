#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace symfs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero or collinear vectors handed to Gram-Schmidt.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class InvalidClassCount : public Error {
 public:
  explicit InvalidClassCount(std::size_t n)
      : Error("class count must be at least 3, got " + std::to_string(n)), count(n) {}
  std::size_t count;
};

class PlaneMissesSum : public Error {
 public:
  using Error::Error;
};

class NoExtremumFound : public Error {
 public:
  using Error::Error;
};

class ZeroNormInput : public Error {
 public:
  explicit ZeroNormInput(std::size_t r)
      : Error("input row " + std::to_string(r) + " has zero norm"), row(r) {}
  std::size_t row;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class CountMismatch : public Error {
 public:
  using Error::Error;
};

// Bad shapes, out-of-range hyperparameters, malformed user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace symfs
