#pragma once
// Drift estimation from Langevin observations via the estimating equation
// sum_i grad_x psi_theta(X_i) = 0: offline, online (cumulative, per batch,
// averaged) and sequential schemes, plus long-run covariance estimation.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgf/langevin.hpp"
#include "wgf/potential.hpp"

namespace wgf {

struct ThetaEstimate {
    Eigen::VectorXd theta;
    int n_used = 0;
    int newton_iters = 0;
    double residual_norm = 0.0; // norm of the estimating equation at theta
};

// Estimates indexed by the amount of data used (batches or observations).
struct EstimatorTrajectory {
    std::vector<Eigen::VectorXd> estimates;
    std::string scheme;

    int steps() const { return int(estimates.size()); }
    int q() const { return estimates.empty() ? 0 : int(estimates.front().size()); }
};

// Solves sum_i grad_x psi_theta(X_i) = 0 by damped Newton iteration over the
// rows of obs. For quadratic potentials the root is the sample mean and one
// Newton step lands on it exactly.
ThetaEstimate solve_estimating_equation(const ParametricPotential& pot,
                                        const Eigen::MatrixXd& obs,
                                        std::optional<Eigen::VectorXd> theta_init = {});

ThetaEstimate solve_offline(const ParametricPotential& pot, const SamplePath& path,
                            std::optional<Eigen::VectorXd> theta_init = {});

// Plug-in long-run covariance of the estimator: gamma_hat such that
// gamma_hat^2 estimates A^-1 Sigma_f A^-T, with Sigma_f from a Bartlett
// window of autocovariances. lag_cutoff < 0 means floor(n^(1/3)).
Eigen::MatrixXd estimate_gamma(const ParametricPotential& pot, const Eigen::VectorXd& theta_hat,
                               const SamplePath& path, int lag_cutoff = -1);

// theta_hat^(k) from the pooled observations of batches 1..k, warm-started
// at the previous estimate.
EstimatorTrajectory online_cumulative(const ParametricPotential& pot, const BatchSet& batches);

// theta_hat^(k) from batch k alone.
EstimatorTrajectory per_batch(const ParametricPotential& pot, const BatchSet& batches);

// theta_hat^(k) from the first k observations of a single path.
EstimatorTrajectory sequential(const ParametricPotential& pot, const SamplePath& path);

// Potential averaging psi over the first k per-batch estimates:
// psi_avg(x) = (1/k) sum_j psi_{theta_j}(x).
struct AveragedPotential {
    const ParametricPotential* pot = nullptr;
    std::vector<Eigen::VectorXd> thetas;

    double psi(const Eigen::VectorXd& x) const;
    Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const;
    double psi1(double x) const;
    double grad_x1(double x) const;
};

AveragedPotential averaged_psi(const ParametricPotential& pot,
                               const EstimatorTrajectory& per_batch_estimates, int k);

} // namespace wgf
