#pragma once

#include <stdexcept>

namespace qtbo {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError (and ShapeError) -> 2, NumericalError -> 3, DegeneracyError -> 4.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qtbo
