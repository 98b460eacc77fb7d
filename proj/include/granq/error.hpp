#pragma once

#include <stdexcept>
#include <string>

namespace granq {

// Runtime failure inside a computation (exit code 2 at the CLI).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: schema violations, out-of-range values, inconsistent config
// (exit code 1 at the CLI).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace granq
