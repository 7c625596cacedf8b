#pragma once

#include <stdexcept>
#include <string>

namespace tpi {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (negative resilience, non-positive depth, bad shapes).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// kappa = delta / rho^2 fails to decrease along some path.
class MonotonicityViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Schedule, certificate or payoff does not match the tree it is evaluated on.
class GridMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TerminalNotZero : public Error {
public:
    using Error::Error;
};

class NoSignChange : public Error {
public:
    using Error::Error;
};

class InvalidCertificate : public Error {
public:
    using Error::Error;
};

class InfeasibleCertificate : public Error {
public:
    using Error::Error;
};

class SuperReplicationViolated : public Error {
public:
    using Error::Error;
};

class InfeasibleInit : public Error {
public:
    using Error::Error;
};

class InstanceTooLarge : public Error {
public:
    using Error::Error;
};

class NotApplicable : public Error {
public:
    using Error::Error;
};

} // namespace tpi
