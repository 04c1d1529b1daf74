#ifndef EXZONE_ERRORS_HPP
#define EXZONE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace exzone {

// Invalid argument values (geometry, rates, out-of-range inputs).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Parameters violate a structural hypothesis of the growth model
// (e.g. the potential has no positive area).
struct HypothesisError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SizeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Time integration failures.
struct StiffnessFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteState : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nonlinear / linear solver failures.
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularJacobian : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested profile does not exist (interval shorter than the monotone branch).
struct NoBranch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trajectory too short for tail statistics.
struct InsufficientTail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration parsing/validation; carries all field-level messages at once.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace exzone

#endif
