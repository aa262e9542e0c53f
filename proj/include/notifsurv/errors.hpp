#pragma once

#include <stdexcept>
#include <string>

namespace notifsurv {

/// Base for all recoverable library errors. The CLI maps each subclass to an
/// exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Optimizer failure or non-finite arithmetic (CLI exit code 4).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace notifsurv
