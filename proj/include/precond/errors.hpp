#pragma once

#include <stdexcept>
#include <string>

namespace precond {

struct DefinitenessError : std::domain_error {
    double eigenvalue;
    DefinitenessError(const std::string& what, double ev) : std::domain_error(what), eigenvalue(ev) {}
};

struct SingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when a target fails strong log-concavity at some probed point.
struct AssumptionViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundInapplicable : std::domain_error {
    using std::domain_error::domain_error;
};

struct EigengapError : std::domain_error {
    using std::domain_error::domain_error;
};

struct DegeneratePairingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : ConfigError {
    int line;
    ParseError(const std::string& msg, int ln)
        : ConfigError("line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

}  // namespace precond
