#pragma once

#include <stdexcept>
#include <string>

namespace pate {

// Error categories map to CLI exit codes: config=2, io=3, numeric=4.
// Precondition violations inside the library throw std::invalid_argument.

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when training produces a non-finite loss or parameters.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pate
