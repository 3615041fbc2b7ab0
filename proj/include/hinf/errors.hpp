#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace hinf {

// Base class for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Pivot collapse in a linear solve. Carries the frequency when the solve was
// part of a per-frequency evaluation.
class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& what, std::optional<double> omega = std::nullopt)
        : Error(omega ? what + " (omega = " + std::to_string(*omega) + ")" : what), omega_(omega) {}

    [[nodiscard]] std::optional<double> omega() const { return omega_; }

private:
    std::optional<double> omega_;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

// Quadrature or iteration did not reach the requested accuracy.
class PrecisionError : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// Evaluation at a pole of a transfer function or filter.
class PoleError : public Error {
public:
    PoleError(const std::string& what, double omega)
        : Error(what + " (omega = " + std::to_string(omega) + ")"), omega_(omega) {}

    [[nodiscard]] double omega() const { return omega_; }

private:
    double omega_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

// A quantity the algorithm guarantees by construction came out wrong.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

} // namespace hinf
