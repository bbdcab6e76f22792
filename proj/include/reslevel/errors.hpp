#pragma once

#include <stdexcept>
#include <string>

namespace reslevel {

/// Argument outside the domain of an operation (pole, negative time, t < t').
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A map or Kraus construction that would need a negative Choi eigenvalue.
struct CpViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive integrator could not make progress.
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation not defined for the requested representation (e.g. spin mode).
struct UnsupportedModeError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Invalid scenario configuration; carries the offending field name.
struct ConfigError : std::runtime_error {
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace reslevel
