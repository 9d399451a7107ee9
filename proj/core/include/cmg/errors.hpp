#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cmg {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user input: malformed mesh files, inconsistent solver
// configuration, out-of-range requests. CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

// Numerical failure inside a solver: indefinite pencil, Jacobi
// non-convergence, CG breakdown. CLI maps this to exit code 1.
struct NumericError : Error {
    using Error::Error;
};

// Filesystem / stream failure.
struct IoError : Error {
    using Error::Error;
};

// CG hit a zero-curvature direction; carries the last iterate so the
// caller can inspect or salvage it.
struct CgBreakdownError : NumericError {
    CgBreakdownError(const std::string& msg, std::vector<double> last)
        : NumericError(msg), iterate(std::move(last)) {}
    std::vector<double> iterate;
};

} // namespace cmg
