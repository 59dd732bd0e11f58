#pragma once

#include <stdexcept>
#include <string>

namespace dip {

// Error taxonomy used across the library. The CLI maps these to exit codes:
// ConfigError -> 2, IoError -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error("domain error: " + msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("configuration error: " + msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("i/o error: " + msg) {}
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& msg, int iteration)
        : Error("numerical error: " + msg), iteration(iteration) {}
    int iteration = -1;
};

} // namespace dip
