#pragma once

#include <stdexcept>
#include <string>

namespace tsal {

// Base class for all library errors. Subclasses map onto the CLI exit
// codes: usage problems exit 1, data/format problems exit 2, numeric
// failures exit 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes for an operation.
struct DimensionError : Error {
    using Error::Error;
};

// A precondition of an operation was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Input outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Index outside a valid range.
struct BoundsError : Error {
    using Error::Error;
};

// Malformed on-disk data; message carries the line number where known.
struct FormatError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Non-finite values or a diverged computation.
struct NumericError : Error {
    using Error::Error;
};

// Inconsistent or incomplete configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Not enough data to compute a statistic.
struct InsufficientDataError : Error {
    using Error::Error;
};

}  // namespace tsal
