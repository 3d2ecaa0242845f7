#pragma once

#include <stdexcept>
#include <string>

namespace mfg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad grid size, mismatched shapes, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical solver could not produce a valid result (NaN, instability, failed solve).
class SolverError : public Error {
public:
    using Error::Error;
};

/// An analytic reference solution failed its own numerical self-check.
class OracleValidationError : public Error {
public:
    using Error::Error;
};

/// A run configuration is malformed or out of range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A persisted artifact (checkpoint, CSV) could not be parsed.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace mfg
