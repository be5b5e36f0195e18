#pragma once

#include <stdexcept>
#include <string>

namespace kpm {

/// Malformed or unreadable input data (files, dimensions, graph structure).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameter combinations (degree not a multiple of 4, eps out of range, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside [-1, 1] or an empty/reversed interval.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative procedure failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kpm
