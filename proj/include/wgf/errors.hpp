#pragma once
// Error taxonomy shared by all modules. ConfigError maps to CLI exit code 2,
// NumericError and its subclasses map to exit code 3.

#include <stdexcept>
#include <string>

namespace wgf {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent user-provided configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A numerical procedure left its domain of validity.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Density mass vanished or became non-finite during renormalization.
class AllMassLost : public NumericError {
public:
    explicit AllMassLost(const std::string& msg) : NumericError(msg) {}
};

// Two grid-indexed objects were combined but live on different grids.
class GridMismatch : public NumericError {
public:
    explicit GridMismatch(const std::string& msg) : NumericError(msg) {}
};

// Newton system for an estimating equation lost rank.
class SingularJacobian : public NumericError {
public:
    explicit SingularJacobian(const std::string& msg) : NumericError(msg) {}
};

// An iterative solve hit its iteration cap without meeting tolerance.
class NoConvergence : public NumericError {
public:
    explicit NoConvergence(const std::string& msg) : NumericError(msg) {}
};

// A banded transport problem admits no feasible plan at the current width.
class BandInfeasible : public NumericError {
public:
    explicit BandInfeasible(const std::string& msg) : NumericError(msg) {}
};

// A time stepper produced unbounded values.
class Diverged : public NumericError {
public:
    explicit Diverged(const std::string& msg) : NumericError(msg) {}
};

// A linear solve encountered a vanishing pivot.
class SolverBreakdown : public NumericError {
public:
    explicit SolverBreakdown(const std::string& msg) : NumericError(msg) {}
};

// An estimator trajectory is shorter than the number of steps that need it.
class TrajectoryTooShort : public NumericError {
public:
    explicit TrajectoryTooShort(const std::string& msg) : NumericError(msg) {}
};

// A covariance update left the positive-definite cone.
class LostPositiveDefiniteness : public NumericError {
public:
    explicit LostPositiveDefiniteness(const std::string& msg) : NumericError(msg) {}
};

// A damped fixed-point iteration failed to contract.
class FixedPointDiverged : public NumericError {
public:
    explicit FixedPointDiverged(const std::string& msg) : NumericError(msg) {}
};

// Requested tensor quadrature dimension exceeds the supported range.
class DimensionTooLarge : public NumericError {
public:
    explicit DimensionTooLarge(const std::string& msg) : NumericError(msg) {}
};

} // namespace wgf
