#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ksb {

// Base of every error thrown by the library. Callers that only need to know
// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Iterative solver failed to reach its tolerance, or produced a non-finite
// iterate. `residual` is the last measured residual (may be NaN).
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Mismatched vector/matrix dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid user configuration (cluster count, option values, unknown method).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or invalid input data. `index` is the offending row or line
// (0-based row for validation failures, 1-based line for parse failures).
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t index)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

// Method of moments produced non-positive shape parameters.
class EstimationError : public Error {
public:
    using Error::Error;
};

// No cluster has a finite score for some point.
class AssignmentError : public Error {
public:
    AssignmentError(const std::string& what, std::size_t point)
        : Error(what), point_(point) {}
    std::size_t point() const noexcept { return point_; }

private:
    std::size_t point_;
};

}  // namespace ksb
