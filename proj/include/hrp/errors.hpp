#pragma once

#include <stdexcept>
#include <string>

namespace hrp {

// Configuration problems (bad parameters, malformed config, degenerate grids).
// CLI maps these to exit code 2.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures at run time (non-convergence, positivity loss, failed
// brackets, out-of-coverage queries).  CLI maps these to exit code 3.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct PositivityError : SolverError {
    explicit PositivityError(const std::string& what) : SolverError(what) {}
};

struct BracketError : SolverError {
    explicit BracketError(const std::string& what) : SolverError(what) {}
};

struct ExtrapolationError : SolverError {
    explicit ExtrapolationError(const std::string& what) : SolverError(what) {}
};

struct RegressionError : SolverError {
    explicit RegressionError(const std::string& what) : SolverError(what) {}
};

}  // namespace hrp
