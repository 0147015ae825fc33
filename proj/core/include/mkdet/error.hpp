#pragma once

#include <stdexcept>
#include <string>

namespace mkdet {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or inconsistent parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing, malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace mkdet
