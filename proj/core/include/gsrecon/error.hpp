#pragma once

#include <stdexcept>
#include <string>

namespace gsr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data: bad files, shape mismatches, empty masks.
class DataError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not produce a result (RANSAC without consensus, degenerate focal problem).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared during training or inference.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsr
