#pragma once

#include <stdexcept>
#include <string>

namespace tellipsoid {

// Input fails a structural or statistical precondition (bad dimensions,
// malformed values, out-of-range parameters). CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failure (missing file, unreadable stream, write failure).
// CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tellipsoid
