#pragma once

#include <stdexcept>
#include <string>

namespace adascale {

// Bad argument or configuration value. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input file that cannot be parsed or violates its schema. CLI exit code 3.
class MalformedInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace adascale
