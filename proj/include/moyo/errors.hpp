#pragma once

#include <stdexcept>
#include <string>

namespace moyo {

// Bad user input: dimensions, schema violations, unsupported combinations.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An iterative solver ran out of iterations without meeting its tolerance.
struct SolverFailure : std::runtime_error {
    int iterations;
    SolverFailure(const std::string& msg, int iters)
        : std::runtime_error(msg + " (iterations: " + std::to_string(iters) + ")"),
          iterations(iters) {}
};

// A constraint set turned out to be empty.
struct InfeasibleSet : std::runtime_error {
    explicit InfeasibleSet(const std::string& msg) : std::runtime_error(msg) {}
};

// A trajectory left the representable range (NaN/Inf state).
struct DivergenceError : std::runtime_error {
    long step;
    long path;
    DivergenceError(const std::string& msg, long step_, long path_)
        : std::runtime_error(msg + " (path " + std::to_string(path_) + ", step " +
                             std::to_string(step_) + ")"),
          step(step_),
          path(path_) {}
};

// Quadrature truncation would discard non-negligible mass.
struct TruncationError : std::runtime_error {
    explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Step-size auto-tuning left the acceptable window.
struct TuningFailure : std::runtime_error {
    explicit TuningFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// A scalar function kept decreasing past the bracketing cap.
struct CoercivityError : std::runtime_error {
    explicit CoercivityError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace moyo
