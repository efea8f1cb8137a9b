#pragma once

#include <stdexcept>

namespace cscae {

/// Invalid configuration, flags, or otherwise inconsistent caller input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape disagreement between tensors; messages name the offending operation.
struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

/// Filesystem and serialization failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values and other numeric failures (e.g. training divergence).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cscae
