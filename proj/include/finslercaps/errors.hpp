#pragma once

#include <stdexcept>
#include <string>

namespace finslercaps {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input lies outside the domain of an operation (zero direction,
/// origin not interior, unattainable slope, class outside a cone, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The operation is not defined for this representation, e.g. tensor
/// calculus on a polytopal (non-smooth) metric.
class UnsupportedRepresentation : public DomainError {
public:
    using DomainError::DomainError;
};

/// A parameter record violates its declared invariants.
class ContractError : public DomainError {
public:
    using DomainError::DomainError;
};

/// An iterative solver did not reach its tolerance.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, std::string diagnostics = {})
        : Error(what), diagnostics_(std::move(diagnostics)) {}

    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

} // namespace finslercaps
