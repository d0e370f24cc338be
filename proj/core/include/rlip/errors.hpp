#pragma once

#include <stdexcept>
#include <string>

namespace rlip {

/// Invalid hyper-parameter or model configuration.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Vector or matrix dimensions do not match what an operation expects.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or density evaluation hit a singular or non-finite value.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Training left the bounded region assumed by the convergence theory.
class DivergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A config, report or output file could not be read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace rlip
