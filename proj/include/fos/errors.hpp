#pragma once

#include <stdexcept>
#include <string>

namespace fos {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: malformed files, inconsistent dimensions, out-of-domain arguments.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The input was well formed but the numerics failed (singular, infeasible, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IndexError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotSPD : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PoleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotControllable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotObservable : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EigenFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InnovationSingular : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InfeasibleStateConstraints : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonFiniteError : public NumericalError {
public:
    NonFiniteError(const std::string& what, long step)
        : NumericalError(what + " (first non-finite value at step " + std::to_string(step) + ")"),
          step_(step) {}

    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace fos
