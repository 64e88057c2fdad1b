#pragma once

#include <stdexcept>
#include <string>

namespace lfboot {

/// Invalid parameters or preconditions supplied by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data that cannot be processed (too short, degenerate, malformed).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed (factorization, quadrature, non-finite result).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lfboot
