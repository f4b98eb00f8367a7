#pragma once

#include <stdexcept>
#include <string>

namespace symbreak {

/// Bad parameters, malformed specs, inconsistent configuration. CLI maps
/// these to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape mismatch between an operand and what an operation expects.
class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Empty or degenerate dataset (e.g. a single class where two are needed).
class DatasetError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Operation not defined for this group kind (e.g. invariant projection of a
/// continuous action).
class UnsupportedActionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Numerical failure at runtime. CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Asymptotic or closed-form expression evaluated outside its regime
/// (e.g. ridgeless fixed point in the under-parameterized case).
class RegimeError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Training loss became non-finite.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int epoch)
        : NumericError(what + " (epoch " + std::to_string(epoch) + ")"), epoch(epoch) {}
    int epoch;
};

}  // namespace symbreak
