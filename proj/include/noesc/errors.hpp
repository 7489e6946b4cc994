#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noesc {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

/// A state component became NaN or infinite during integration.
struct NonFiniteState : Error {
  using Error::Error;
};

/// A performance measurement returned NaN or infinity.
struct NonFiniteValue : Error {
  using Error::Error;
};

struct OutOfRange : Error {
  using Error::Error;
};

/// A boundary output value lies at or beyond the saturation bounds.
struct BoundaryOutOfRange : OutOfRange {
  using OutOfRange::OutOfRange;
};

struct OutOfDomain : Error {
  using Error::Error;
};

struct UnsupportedOrder : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

/// Newton iteration on the shooting residual did not reach the tolerance.
struct NoConvergence : Error {
  NoConvergence(const std::string& what, double best_residual, std::size_t iterations)
      : Error(what), best_residual(best_residual), iterations(iterations) {}
  double best_residual;
  std::size_t iterations;
};

}  // namespace noesc
