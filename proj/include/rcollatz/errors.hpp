#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rcollatz {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition of an operation was not met by its caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A noise value that is even or below -1.
class InvalidXi : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A statistic was requested from an accumulator that holds no usable data.
class NoData : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// An iterative method hit its iteration cap before reaching tolerance.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(const std::string& what, double residual, std::uint64_t iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::uint64_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::uint64_t iterations_;
};

class Unreachable : public Error {
public:
    using Error::Error;
};

}  // namespace rcollatz
