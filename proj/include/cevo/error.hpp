#pragma once

#include <stdexcept>
#include <string>

namespace cevo {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, empty archive, non-positive tolerance, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for unreadable or unwritable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* message)
{
    if (!condition)
        throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw ContractViolation(message);
}

} // namespace cevo
