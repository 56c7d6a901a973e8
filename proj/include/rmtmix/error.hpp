#pragma once

#include <stdexcept>
#include <string>

namespace rmtmix {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
  using Error::Error;
};

/// Operands of incompatible shape.
struct ShapeError : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

/// Invalid experiment or operation configuration (bad counts, ranges, missing keys).
struct ConfigError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
struct DomainError : Error {
  using Error::Error;
};

struct PreconditionError : Error {
  using Error::Error;
};

/// Eigensolver failed to converge. Carries the matrix dimension and solver status code.
struct DiagonalizationError : Error {
  DiagonalizationError(const std::string& what, int dimension, int info)
      : Error(what + " (dimension " + std::to_string(dimension) + ", info " + std::to_string(info) + ")"),
        dimension(dimension),
        info(info) {}
  int dimension;
  int info;
};

struct UnfoldingError : Error {
  using Error::Error;
};

struct RankDeficiencyError : Error {
  using Error::Error;
};

/// Estimated cost of a run exceeds the configured budget.
struct ResourceRefusal : Error {
  using Error::Error;
};

}  // namespace rmtmix
