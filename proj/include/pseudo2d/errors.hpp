#pragma once

#include <stdexcept>
#include <string>

namespace pseudo2d {

// Bad user input: invalid code distance, malformed trace, inconsistent
// device parameters. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Integrator or fit did not converge. Maps to CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pseudo2d
