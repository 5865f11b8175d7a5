#pragma once

#include <stdexcept>
#include <string>

namespace ndd {

// Invalid user-supplied input: malformed data, bad tree text, bad flags.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: domain violation, non-convergence, loss of precision.
// The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ndd
