#pragma once

#include <stdexcept>
#include <string>

namespace gmrf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration, arguments or input files (CLI exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Numerical failure: singular systems, invalid parameters, failed
/// factorizations (CLI exit code 3).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

} // namespace gmrf
