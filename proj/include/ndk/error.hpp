#pragma once

#include <stdexcept>

namespace ndk {

// Bad input: malformed files, shape mismatches, out-of-range parameters.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that could not produce a finite or converged result.
// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ndk
