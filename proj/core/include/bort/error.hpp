#pragma once

#include <stdexcept>
#include <string>

namespace bort {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape/geometry mismatch between tensors.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bad layer geometry, bad hyperparameter, bad config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite values, non-convergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File format / filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Training loss became non-finite; a diagnostic snapshot was emitted before the throw.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace bort
