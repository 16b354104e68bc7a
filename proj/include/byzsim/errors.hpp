#pragma once

#include <stdexcept>
#include <string>

namespace byzsim {

/// Raised when an argument violates an operation's precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is not available for the given loss or source kind.
class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

}  // namespace byzsim
