#pragma once

#include <stdexcept>
#include <string>

namespace spintok {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct CorruptionError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct LengthError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
struct TrainingError : Error {
    using Error::Error;
};
struct LookupError : Error {
    using Error::Error;
};
struct DegenerateError : Error {
    using Error::Error;
};

}  // namespace spintok
