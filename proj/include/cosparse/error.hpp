#pragma once

#include <stdexcept>
#include <string>

namespace cosparse {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (even patch side, sigma <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Vector or field sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent segmentation setup (missing labels, too many classes, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operator file could not be parsed or violates the operator invariants.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Image or label payload could not be decoded or written.
class ImageIoError : public Error {
 public:
  using Error::Error;
};

/// The primal-dual iteration produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace cosparse
