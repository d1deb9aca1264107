#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lago {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad command line or a request missing what its command needs (exit 2).
class UsageError : public Error {
public:
    using Error::Error;
};

// Inputs violate a shape or domain contract (bad dimensions, out-of-box
// packages, malformed data). Reported by the CLI with exit code 3.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Configuration or data-file problem, optionally tied to a line number.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Numerical failure (fit divergence, singular matrices). Exit code 4.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SeparationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonIdentifiableError : public NumericalError {
public:
    NonIdentifiableError(const std::string& what, std::vector<std::string> columns)
        : NumericalError(what), columns_(std::move(columns)) {}
    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

class NonConvergenceError : public NumericalError {
public:
    NonConvergenceError(const std::string& what, std::vector<double> last_iterate)
        : NumericalError(what), last_iterate_(std::move(last_iterate)) {}
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace lago
