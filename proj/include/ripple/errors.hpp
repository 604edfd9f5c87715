#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace ripple {

/// Input outside the domain of a model function (non-finite value, exponent overflow).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid parameters, profile or configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure inside a numerical procedure. Carries the simulation time when known.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what,
                          double time = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// An iterative procedure stopped before meeting its tolerance.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericError(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

} // namespace ripple
