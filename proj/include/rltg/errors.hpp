#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rltg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (empty input, K > |V|, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The API was driven in the wrong order, e.g. backward with a stale cache.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Optimisation produced a non-finite value.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a component's contract (out-of-range index, wrong list length, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Component configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given input (e.g. AUC on one class).
class MetricsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input record. `line()` is 1-based; 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rltg
