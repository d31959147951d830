#pragma once
// Crank-Nicolson solver for the 1-d drift-diffusion equation
// d_t v = d_x(b v) + (1/beta) d_xx v with homogeneous Dirichlet walls,
// optionally with a time-dependent drift and an additive forcing term.

#include <functional>
#include <vector>

#include "wgf/grid.hpp"

namespace wgf {

// Drift values b(x_j) used for the step from t_i to t_{i+1}.
using DriftProvider = std::function<std::vector<double>(int step)>;

// Additive forcing rate f(t_{i+1}, x_j); the step adds dt * f.
using ForcingProvider = std::function<std::vector<double>(int step)>;

struct CnOptions {
    bool renormalize_each_step = true; // project back to unit mass
    double diverge_guard = 1e12;       // max-norm bound before declaring blow-up
};

// Constant-drift convenience wrapper.
DriftProvider constant_drift(const Grid1D& grid, const std::function<double(double)>& b);

// Advances rho0 over the time grid and records every node value, including
// the initial slice. Throws SolverBreakdown on a vanishing pivot, Diverged
// when the max norm exceeds the guard, AllMassLost if renormalization finds
// no mass.
FieldGrid cn_solve(const DensityGrid& rho0, const DriftProvider& drift, double beta,
                   const TimeGrid& time, const CnOptions& opts = {},
                   const ForcingProvider& forcing = nullptr);

// Tridiagonal solve (Thomas algorithm); diag/lower/upper are the matrix
// bands, rhs is overwritten with the solution.
void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                  std::vector<double>& upper, std::vector<double>& rhs);

} // namespace wgf
