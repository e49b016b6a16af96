#pragma once

#include <stdexcept>
#include <string>

namespace nowpac {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A black box returned NaN or an infinity.
class NonFiniteEvaluation : public Error {
 public:
  using Error::Error;
};

/// The interpolation saddle system is too badly conditioned to solve.
class SingularGeometry : public Error {
 public:
  using Error::Error;
};

class ImprovementStalled : public Error {
 public:
  using Error::Error;
};

class SubproblemInfeasibleStart : public Error {
 public:
  using Error::Error;
};

class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class UnknownProblemId : public Error {
 public:
  using Error::Error;
};

class EmptyResults : public Error {
 public:
  using Error::Error;
};

/// Malformed command line.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace nowpac
