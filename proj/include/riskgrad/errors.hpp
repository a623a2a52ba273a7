#pragma once

#include <stdexcept>
#include <string>

namespace riskgrad {

// Validation failures (bad inputs, malformed configs). CLI maps these to exit 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

struct RowSumViolation : ValidationError {
    using ValidationError::ValidationError;
};

struct SupportMismatch : ValidationError {
    using ValidationError::ValidationError;
};

struct NotIrreducible : ValidationError {
    using ValidationError::ValidationError;
};

struct MissingScores : ValidationError {
    using ValidationError::ValidationError;
};

// Numerical failures (iteration limits, conditioning). CLI maps these to exit 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularSystem : NumericalError {
    using NumericalError::NumericalError;
};

struct CycleCapExceeded : NumericalError {
    using NumericalError::NumericalError;
};

struct BracketFailure : NumericalError {
    using NumericalError::NumericalError;
};

struct DepthTooSmall : NumericalError {
    using NumericalError::NumericalError;
};

struct LadderExhausted : NumericalError {
    using NumericalError::NumericalError;
};

// The deterministic lower bound on the cost iterate can only break if the
// update rule itself is implemented wrong, so this is a hard failure.
struct LowerBoundViolated : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace riskgrad
