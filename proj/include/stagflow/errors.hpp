#pragma once

#include <stdexcept>
#include <string>

namespace stagflow {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown by iterative solvers; carries the last relative residual.
struct ConvergenceFailure : NumericalFailure {
    ConvergenceFailure(const std::string& what, double residual, int iterations)
        : NumericalFailure(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

}  // namespace stagflow
