#pragma once

#include <stdexcept>
#include <string>

namespace kcs {

/// Malformed input data, e.g. points of mismatched dimension.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: bad hyperparameters, unknown keys, uncached alpha.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed or produced a value outside its contract.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The confidence set is empty (negative squared radius or infeasible cone
/// program). This falsifies the norm-bound assumption for the data seen.
class InfeasibleSetError : public NumericError {
public:
    using NumericError::NumericError;
};

/// An internal invariant was violated (e.g. a non-positive Schur complement).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace kcs
