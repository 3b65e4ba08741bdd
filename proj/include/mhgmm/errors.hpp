#pragma once

#include <stdexcept>
#include <string>

namespace mhgmm {

/// Invalid user configuration (bad flag values, inconsistent options).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unusable input data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure produced a non-finite or otherwise unusable result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mhgmm
