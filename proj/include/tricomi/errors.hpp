#pragma once

#include <stdexcept>
#include <string>

namespace tricomi {

// Precondition violated by the caller (maps to CLI exit code 2).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A sign assumption behind a bracketed root search did not hold.
struct RootNotBracketed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Constraint system has no solution for the requested unknown.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pointwise special-function value requested outside the supported regime.
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive integrator could not make progress.
struct StepCollapseError : std::runtime_error {
    double t;
    StepCollapseError(const std::string& what, double t_) : std::runtime_error(what), t(t_) {}
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Target time outside the range covered by a trace.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Quadrature or resampling cannot meet its error budget.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Too few samples, or samples spanning too short a range, for a fit or quadrature.
struct InsufficientSamples : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A probe was asked to run outside the hypotheses of the statement it probes.
struct HypothesisViolation : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace tricomi
