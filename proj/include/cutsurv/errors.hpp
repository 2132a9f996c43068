#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cutsurv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `row` is the 1-based data row (header excluded), 0 if not row-specific.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row(row) {}
  std::size_t row;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

/// IRLS failures, singular systems.
struct NumericError : Error {
  using Error::Error;
};

/// A metric has no comparable pairs, no cases, or a degenerate design.
struct UndefinedMetricError : Error {
  using Error::Error;
};

/// Non-finite loss or gradient during training.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, int epoch, int batch)
      : Error(what + " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace cutsurv
