#pragma once

#include <stdexcept>
#include <string>

namespace acdesign {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the admissible set (dose outside the range, bad parameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Model or design violates a construction invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Per-observation information is undefined (probability hits 0 or 1 inside the range).
class SingularInformation : public Error {
 public:
  using Error::Error;
};

/// K^T theta is not in the range of the information matrix.
class NotEstimable : public Error {
 public:
  using Error::Error;
};

/// The control response is not attained by the drug on its dose range.
class NoTargetDose : public Error {
 public:
  using Error::Error;
};

/// A closed-form construction does not apply (root not bracketed, threshold outside range).
class InfeasibleGeometry : public Error {
 public:
  using Error::Error;
};

/// Requested combination is outside what the routine handles.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace acdesign
