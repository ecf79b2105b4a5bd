#pragma once

#include <stdexcept>
#include <string>

namespace lamaml {

// Shape or dimension disagreement between tensors / parameter vectors.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf encountered where a finite value is required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unreadable input data (IDX files, etc).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lamaml
