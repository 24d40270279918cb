#pragma once

#include <stdexcept>
#include <string>

namespace qc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// precondition or domain violation (non-finite input, bad matrix, ...)
struct DomainError : Error {
    using Error::Error;
};

// a tangent vector or displacement reached the injectivity radius 1/2
struct InjectivityError : Error {
    using Error::Error;
};

// measured constants put the system outside the contraction regime
struct GuardError : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {}
    int line;
};

} // namespace qc
