#pragma once
// Minimizing-movement (proximal) scheme for the free energy
// F(rho) = Int psi rho + (1/beta) Int rho log rho: each outer step solves
// argmin { W2(rho, rho_prev)^2 / 2 + delta F(rho) } by projected descent on
// the first-variation field, with banded couplings supplying the transport
// term.

#include <functional>
#include <string>
#include <vector>

#include "wgf/estimators.hpp"
#include "wgf/grid.hpp"
#include "wgf/transport1d.hpp"

namespace wgf {

// Pointwise potential and its gradient for one outer step.
struct StepPotential {
    std::function<double(double)> psi;
    std::function<double(double)> grad;
};

struct JkoOptions {
    double delta = 0.01;  // outer time step
    double beta = 1.0;
    double kappa = 1e-4;  // inner stopping tolerance on the L1 norm of alpha
    int max_inner = 2000;
    double tau0 = 1e-3;   // inner step scale
    enum class Schedule { inv_log, inv_linear };
    Schedule schedule = Schedule::inv_log;
    bool nesterov = true;
    int band = 1;         // initial coupling band half-width, widened on demand
    enum class Interp { ceil_index, floor_index };
    Interp interp = Interp::ceil_index; // piecewise-constant interpolation rule
};

struct JkoStepDiag {
    int inner_iters = 0;     // 0-based index of the last inner evaluation
    double alpha_l1 = 0.0;   // first-variation L1 norm at exit
    bool stalled = false;    // hit max_inner with alpha_l1 above tolerance
    int band_used = 1;
    double w2_sq = 0.0;      // histogram W2^2 to the previous iterate
    double free_energy = 0.0;
};

struct JkoTrajectory {
    std::vector<DensityGrid> iterates; // index k holds rho^(k), k = 0..N
    std::vector<JkoStepDiag> diags;    // one entry per outer step
    JkoOptions opts;

    int steps() const { return int(diags.size()); }
    // Density at continuous time t under the piecewise-constant rule.
    const DensityGrid& at_time(double t) const;
    FieldGrid to_field(const TimeGrid& time) const;
};

// First-variation field of one proximal subproblem evaluated at rho_s:
// alpha_j = drift_j(coupling) + delta (grad_j rho_s_j
//           + (rho_s_{j+1} - rho_s_{j-1}) / (2 h beta)), zero at the walls.
std::vector<double> alpha_field(const DensityGrid& rho_o, const DensityGrid& rho_s,
                                const StepPotential& pot, const JkoOptions& opts,
                                const Coupling& coupling);

// One outer step from rho_o. Returns the minimizer and diagnostics.
std::pair<DensityGrid, JkoStepDiag> jko_step(const DensityGrid& rho_o,
                                             const StepPotential& pot,
                                             const JkoOptions& opts);

// N = ceil(T / delta) outer steps with the true potential.
JkoTrajectory run_plain(const DensityGrid& rho0, const StepPotential& pot,
                        const JkoOptions& opts, double T);

// All steps use one fixed estimated parameter.
JkoTrajectory run_offline(const DensityGrid& rho0, const ParametricPotential& pot,
                          const Eigen::VectorXd& theta_hat, const JkoOptions& opts, double T);

enum class OnlineScheme { cumulative, per_batch, averaged, sequential };

// Step k uses the k-th entry of the estimator trajectory (for `averaged`,
// the mean of its first k entries). Throws TrajectoryTooShort when fewer
// estimates than outer steps are available.
JkoTrajectory run_online(const DensityGrid& rho0, const ParametricPotential& pot,
                         const EstimatorTrajectory& estimates, OnlineScheme scheme,
                         const JkoOptions& opts, double T);

StepPotential step_potential(const ParametricPotential& pot, const Eigen::VectorXd& theta);

} // namespace wgf
