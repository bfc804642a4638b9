#pragma once

#include <stdexcept>
#include <string>

namespace evobs {

/// Bad user input: malformed config, degenerate grid, invalid parameters.
/// Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A coefficient field that violates its mathematical requirements
/// (non-symmetric or non-positive-definite metric).
struct EllipticityError : ConfigError {
    explicit EllipticityError(const std::string& what) : ConfigError(what) {}
};

/// Numerical abort: eigensolver failure, singular factorization.
/// Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace evobs
