#pragma once
// Simulation of the limiting fluctuation fields: the linear drift-diffusion
// equation d_t V = div(V grad psi) + (1/beta) Lap V + div(rho grad_tau s(t))
// driven by a fixed Gaussian vector, by W(t)/t, by white noise, or by an
// estimator-coupled scale sequence, plus closed-form references for the
// stationary unit-rate case.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "wgf/estimators.hpp"
#include "wgf/fokker_planck.hpp"
#include "wgf/grid.hpp"
#include "wgf/potential.hpp"
#include "wgf/rng.hpp"

namespace wgf {

struct NoisePath {
    enum class Kind { brownian, white_increments, fixed_gaussian, estimator_coupled };
    TimeGrid time;
    int q = 1;
    Kind kind = Kind::brownian;
    uint64_t seed = 0;
    std::vector<Eigen::VectorXd> values; // one q-vector per time node
};

// Standard Brownian path on the time grid: W(0) = 0, independent N(0, dt I)
// increments.
NoisePath sample_brownian(const TimeGrid& time, int q, uint64_t seed, uint64_t stream);

// Restriction of a Brownian path to every `factor`-th node (the coarsened
// path is again Brownian on the coarser grid).
NoisePath coarsen_brownian(const NoisePath& fine, int factor);

// Constant path holding a single Z ~ N(0, I) draw at every node.
NoisePath fixed_gaussian_noise(const TimeGrid& time, int q, uint64_t seed, uint64_t stream);

// Brownian path tagged for white-noise use: the consumer differences it.
NoisePath white_noise_path(const TimeGrid& time, int q, uint64_t seed, uint64_t stream);

// rho(t_i, x_j) of the unperturbed flow entering the forcing term.
using DensityProvider = std::function<double(int step, int node)>;

// Exact unit-rate Gaussian flow started from N(mu0, var0), beta = 1.
DensityProvider analytic_ou_density(double theta, double mu0, double var0,
                                    const Grid1D& grid, const TimeGrid& time);
DensityProvider field_density(const FieldGrid& f);

// How the per-step scale s is read off the noise path: the node value at the
// end of the step, the step average of W(s)/s with the path linearly
// interpolated (endpoint sampling of this rough integrand would leave an
// O(sqrt(dt)) pathwise bias concentrated near t = 0), differenced increments
// divided by dt, or a precomputed coupled sequence interpreted as the
// integrated per-step forcing.
enum class ScalingRule { fixed_z, wt_over_t, white, coupled };

struct ForcingSpec {
    DensityProvider rho;
    TauField tau;
    NoisePath noise;
    ScalingRule rule = ScalingRule::fixed_z;
};

// Crank-Nicolson integration of the field equation from V(0,.) = 0 with
// Dirichlet walls. For the coupled rule the scale sequence already carries
// the estimator's variability, so the direction field uses an identity
// covariance root in place of tau's.
FieldGrid simulate_field(const ForcingSpec& spec, const ParametricPotential& pot,
                         const Eigen::VectorXd& theta, double beta, const Grid1D& grid,
                         const TimeGrid& time);

// Quadrature of the closed-form expression for the W(t)/t-driven field in
// the stationary unit-rate case (rho0 = N(0,1), theta = 0, beta = 1):
// x gamma (2 pi)^(-1/2) Int_0^t [2-e^(-2(t-s))]^(-3/2)
//   exp(-x^2 / (2(2-e^(-2(t-s))))) s^(-1) W(s) ds.
// Midpoint rule on the noise grid; quad_points > 0 overrides the number of
// subintervals (the path is linearly interpolated).
double v1_closed_form_ou(double gamma, const NoisePath& noise, double t, double x,
                         int quad_points = 0);

// Mild-solution form for the same setup, propagating the forcing with the
// exact transition kernel of the unit-rate flow:
// gamma x phi(x) Int_0^t e^(-(t-s)) s^(-1) W(s) ds with phi the standard
// normal density. Same quadrature conventions as v1_closed_form_ou.
double v1_mild_form_ou(double gamma, const NoisePath& noise, double t, double x,
                       int quad_points = 0);

// Scale sequence s_i = sqrt(m delta) (theta_hat^(i) - theta) on the time
// grid {T = steps * delta, I = steps}; node 0 is zero. Used with
// ScalingRule::coupled.
NoisePath coupled_forcing_from_estimates(const EstimatorTrajectory& traj,
                                         const Eigen::VectorXd& theta, int m, double delta,
                                         const TauField& tau);

} // namespace wgf
