#pragma once

#include <stdexcept>
#include <string>

namespace pnls {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative evaluation did not reach its tolerance within budget.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double estimate, double achieved_error)
        : std::runtime_error(what), estimate_(estimate), achieved_error_(achieved_error) {}

    double estimate() const noexcept { return estimate_; }
    double achieved_error() const noexcept { return achieved_error_; }

private:
    double estimate_;
    double achieved_error_;
};

// Momentum tail of a profile is too heavy for the requested integral.
class TailBoundError : public std::runtime_error {
public:
    TailBoundError(const std::string& what, double bound)
        : std::runtime_error(what), bound_(bound) {}
    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

// Discretization cannot resolve the requested quantity.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration. `field` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace pnls
