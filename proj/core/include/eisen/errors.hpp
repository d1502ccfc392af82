#pragma once

#include <stdexcept>
#include <string>

namespace eisen {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// argument outside the definition domain (pole of a special function, bad range, ...)
struct DomainError : Error {
    using Error::Error;
};

// iterative refinement hit its cap without meeting the tolerance
struct ConvergenceError : Error {
    using Error::Error;
};

// family admits no unique solution (reduced determinant vanishes identically, rank defect, ...)
struct SingularSystemError : Error {
    using Error::Error;
};

// inconsistent overdetermined system in the exact solver
struct InconsistentSystemError : Error {
    using Error::Error;
};

// finite-type witness could not be built or failed a validity check
struct WitnessError : Error {
    using Error::Error;
};

// operator support leaves the discretized region
struct SupportError : Error {
    using Error::Error;
};

// least-squares extraction did not represent the data to tolerance
struct FitError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace eisen
