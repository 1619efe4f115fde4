#pragma once

#include <stdexcept>
#include <string>

namespace sagnac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (non-normalized amplitudes,
/// negative power, zero efficiency, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Time-tag input was not sorted ascending.
class UnsortedInput : public Error {
 public:
  using Error::Error;
};

/// A simulation would exceed its configured memory budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A quantity is mathematically undefined for the given inputs.
class Undefined : public Error {
 public:
  using Error::Error;
};

}  // namespace sagnac
