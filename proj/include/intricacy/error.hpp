#pragma once

#include <stdexcept>
#include <string>

namespace intricacy {

// Invalid configuration or violated precondition. Maps to CLI exit status 1.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Instability, non-finite values, solver failure. Maps to CLI exit status 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace intricacy
