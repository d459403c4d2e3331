#pragma once

#include <stdexcept>
#include <string>

namespace afc {

// Bad parameter values or violated preconditions.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Unreadable or malformed configuration/input files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resource limits (memory cap) exceeded.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver failed to converge or data are degenerate.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace afc
