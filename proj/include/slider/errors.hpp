#pragma once

#include <stdexcept>
#include <string>

namespace slider {

/// Invalid physical parameter or argument (non-positive mass, dt <= 0, NaN demand, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent timing or file configuration (period divisibility, malformed scenario file).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace slider
