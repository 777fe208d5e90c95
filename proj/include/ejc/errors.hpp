#pragma once

#include <stdexcept>
#include <string>

namespace ejc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input or violated precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configured size or resource cap was exceeded.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An algorithm failed to meet its accuracy or structural contract.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ejc
