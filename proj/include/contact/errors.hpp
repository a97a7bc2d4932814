#pragma once

#include <stdexcept>
#include <string>

namespace contact {

/// Bad arguments, mismatched groups, malformed configs. CLI exit code 2.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Instance too large for the exact engine. CLI exit code 2.
class CapacityError : public UsageError {
public:
    explicit CapacityError(const std::string& what) : UsageError(what) {}
};

/// Iteration did not converge, estimator starved, etc. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace contact
