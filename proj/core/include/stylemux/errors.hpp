#pragma once

#include <stdexcept>
#include <string>

namespace stylemux {

// Error taxonomy. The CLI maps these onto process exit codes:
// usage/config -> 1, data/format -> 2, numerical -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flag values, inconsistent configuration, impossible requests.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data, broken file formats.
class DataError : public Error {
 public:
  using Error::Error;
};

// Tensor shape mismatches and other structural contract violations.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Out-of-range ids (vocabulary pieces, embedding rows, registry entries).
class IndexError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required; training aborts on these.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stylemux
