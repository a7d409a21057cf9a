#pragma once

#include <stdexcept>
#include <string>

namespace dpr {

/// Input data violates a format or a domain invariant (bad file, bad label,
/// mismatched dimensions). Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arithmetic broke down: NaN loss, non-finite gradient. Maps to exit code 3.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed an argument outside an operation's preconditions.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace dpr
