#pragma once

#include <stdexcept>
#include <string>

namespace swarmopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A convex program (LP or QP) has no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A linear system stayed singular after regularization.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Time scaling found no admissible factor in its bracket.
class NoFeasibleScaleError : public Error {
 public:
  using Error::Error;
};

/// Free-fall singularity of the flatness map.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace swarmopt
