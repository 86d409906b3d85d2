#pragma once

#include <stdexcept>
#include <string>

namespace cdfm {

/// Malformed input file or dataset content.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value (even kernel, bad ratio, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor shapes disagree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside a function's mathematical domain, or a degenerate sample.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Optimisation failed: non-finite gradients or a diverged loss.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cdfm
