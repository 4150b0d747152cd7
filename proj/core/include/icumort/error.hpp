#pragma once

#include <stdexcept>
#include <string>

namespace icumort {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a numerical procedure that cannot proceed (CLI exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace icumort
