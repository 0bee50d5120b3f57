#pragma once

#include <stdexcept>
#include <string>

namespace sbl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid or quadrature too coarse for the requested field.
struct ResolutionError : Error {
  using Error::Error;
};

// Argument outside the domain of the operation.
struct DomainError : Error {
  using Error::Error;
};

// Two refinement levels disagree beyond tolerance.
struct AccuracyError : Error {
  using Error::Error;
};

struct StepSizeError : Error {
  StepSizeError(const std::string& what, double suggested)
      : Error(what), suggested_dt(suggested) {}
  double suggested_dt;
};

struct ResourceError : Error {
  using Error::Error;
};

struct UnsupportedError : Error {
  using Error::Error;
};

struct TruncationError : Error {
  TruncationError(const std::string& what, int suggested)
      : Error(what), suggested_n_max(suggested) {}
  int suggested_n_max;
};

struct ExtrapolationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace sbl
