#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fraclap {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-range or inconsistent input parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Field or data values that cannot be processed (non-finite samples and similar).
class InputError : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the domain of definition of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Quadrature could not meet its tolerance. Carries the estimate it did reach.
class AccuracyError : public NumericalError {
public:
    AccuracyError(const std::string& what, double achieved)
        : NumericalError(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Nonlinear solve failure. Carries the residual history of the iteration.
class SolveError : public NumericalError {
public:
    SolveError(const std::string& what, std::vector<double> history)
        : NumericalError(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// A constructed object (barrier) failed its own verification.
class ConstructionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fraclap
