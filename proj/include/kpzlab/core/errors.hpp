#pragma once

#include <stdexcept>
#include <string>

namespace kpzlab {

// bad arguments from the caller (wrong order, k out of range, ...)
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfRangeError : NumericError {
    using NumericError::NumericError;
};

struct BlowUpError : NumericError {
    BlowUpError(const std::string& what, long long step_index)
        : NumericError(what + " (step " + std::to_string(step_index) + ")"), step(step_index) {}
    long long step;
};

}  // namespace kpzlab
