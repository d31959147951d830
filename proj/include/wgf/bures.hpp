#pragma once
// Gaussian-restricted gradient flow of the free energy: mean/covariance
// ODEs, the discrete proximal step in the Bures-Wasserstein geometry, and
// the linear ODE/SDE systems satisfied by the limiting perturbations
// (V_mu, V_Sigma). Expectations under Gaussian laws use tensorized
// Gauss-Hermite quadrature (d <= 3).

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wgf/limit_fields.hpp"
#include "wgf/potential.hpp"

namespace wgf {

struct GaussianState {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;

    int dim() const { return int(mu.size()); }
    // Throws ConfigError on shape or symmetry violations and
    // LostPositiveDefiniteness when sigma is not positive definite.
    void validate() const;
};

struct BwLimitState {
    Eigen::VectorXd v_mu;
    Eigen::MatrixXd v_sigma;
};

// Probabilists' Gauss-Hermite rule (weight = standard normal density).
struct GaussHermite {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    static GaussHermite build(int order);
};

struct GaussianExpectations {
    Eigen::VectorXd e_grad;       // E grad psi(X)
    Eigen::MatrixXd e_grad_cross; // E grad psi(X) (X - mu)'
};

// E under N(mu, sigma) by tensor quadrature; order points per axis.
// Exact for polynomial integrands up to degree 2*order - 1, hence exact for
// quadratic potentials. Throws DimensionTooLarge for d > 3.
GaussianExpectations gaussian_expectations(const ParametricPotential& pot,
                                           const Eigen::VectorXd& theta,
                                           const GaussianState& state, int gh_order = 20);

using BwTrajectory = std::vector<std::pair<double, GaussianState>>;
using ThetaSchedule = std::function<Eigen::VectorXd(double)>;

// RK4 integration of mu' = -E grad psi, sigma' = (2/beta) I
// - E[grad psi (X-mu)' + (X-mu) grad' psi] from state0 over [0, T].
BwTrajectory bw_ode_integrate(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                              const GaussianState& state0, double T, double dt,
                              double beta = 1.0, int gh_order = 20);

// Same flow with a time-dependent parameter (for step-indexed estimates).
BwTrajectory bw_ode_integrate(const ParametricPotential& pot, const ThetaSchedule& theta_of_t,
                              const GaussianState& state0, double T, double dt,
                              double beta = 1.0, int gh_order = 20);

// One proximal step: minimizes W2(p, p0)^2 / 2 + delta F(p) over Gaussians
// by a damped fixed-point iteration on the stationarity conditions
//   mu = mu0 - delta E_p(grad psi),
//   M sigma M = sigma0 with M = I + delta (E_p[hess psi] - (1/beta) sigma^-1).
GaussianState bw_jko_step(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          const GaussianState& state0, double delta, double beta = 1.0,
                          int gh_order = 20);

// N proximal steps; entry k holds the state after k steps at time k delta.
BwTrajectory bw_jko_run(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                        const GaussianState& state0, double delta, int steps,
                        double beta = 1.0, int gh_order = 20);

enum class BwSystem { ode_fixed_z, sde_wt_over_t };

// Integrates the linear limit system for (V_mu, V_Sigma) from zero initial
// conditions. p_half must sample the unperturbed flow at spacing dt/2
// (2 round(T/dt) + 1 entries) so the RK4 midpoints are available; the SDE
// system uses explicit Euler with the end-of-step W value. noise must be
// fixed_gaussian for ode_fixed_z and brownian on {T, round(T/dt)} for
// sde_wt_over_t. beta = 1 throughout, matching the flow the system
// linearizes.
std::vector<std::pair<double, BwLimitState>> bw_limit_integrate(
    BwSystem system, const ParametricPotential& pot, const Eigen::VectorXd& theta,
    const TauField& tau, const BwTrajectory& p_half, const NoisePath& noise, double T,
    double dt, int gh_order = 20);

void write_bw_csv(const std::filesystem::path& file, const BwTrajectory& traj);

} // namespace wgf
