#pragma once

#include <stdexcept>
#include <string>

namespace odflow {

// Error taxonomy shared by the whole toolkit. The CLI maps these onto
// exit codes: input/usage problems -> 1, non-convergence -> 2,
// numeric failures -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct IntegrityError : Error {
    using Error::Error;
};
struct InfeasibleError : Error {
    using Error::Error;
};
struct StateError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace odflow
