#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or contract violation (exit code 1 at the CLI).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed text that should conform to a known grammar.
class ParseError : public Error {
public:
    using Error::Error;
};

// Bad configuration file, flags, or environment.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Backend/network failure after retries (exit code 2 at the CLI).
class TransportError : public Error {
public:
    using Error::Error;
};

// Numeric operation with no defined result (e.g. empty mask).
class ComputationError : public Error {
public:
    using Error::Error;
};

} // namespace forge
