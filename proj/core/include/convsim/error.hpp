#pragma once

#include <stdexcept>
#include <string>

namespace convsim {

// Base class for all recoverable failures raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk input (manifest line, config file, wav header, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem / OS level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace convsim
