#pragma once

#include <stdexcept>
#include <string>

namespace phishkey {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, unreadable, or inconsistent input data (corpora, fixtures).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Problems with trained artifacts: bundles, shapes, incompatible versions.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace phishkey
