#pragma once

#include <stdexcept>
#include <string>

namespace slicegcn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or violated precondition on an argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset files missing, truncated, or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity showed up in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace slicegcn
