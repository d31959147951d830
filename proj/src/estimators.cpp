#include "wgf/estimators.hpp"

#include <cmath>

namespace wgf {

namespace {

// Residual of the estimating equation and its Jacobian in theta.
struct EqEval {
    Eigen::VectorXd g;
    Eigen::MatrixXd jac;
};

EqEval eval_equation(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                     const Eigen::MatrixXd& obs, bool with_jac) {
    int d = int(obs.cols());
    int q = pot.dim_theta();
    EqEval e;
    e.g = Eigen::VectorXd::Zero(d);
    if (with_jac) e.jac = Eigen::MatrixXd::Zero(d, q);
    Eigen::VectorXd x(d);
    for (int i = 0; i < obs.rows(); ++i) {
        x = obs.row(i).transpose();
        e.g += pot.grad_x(theta, x);
        if (with_jac) e.jac += pot.grad_theta_grad_x(theta, x);
    }
    return e;
}

Eigen::VectorXd default_init(const ParametricPotential& pot, const Eigen::MatrixXd& obs) {
    // Sample mean is the exact root for quadratics; other potentials start
    // from zero unless the caller provides a guess.
    if (pot.is_quadratic()) return obs.colwise().mean().transpose();
    return Eigen::VectorXd::Zero(pot.dim_theta());
}

} // namespace

ThetaEstimate solve_estimating_equation(const ParametricPotential& pot,
                                        const Eigen::MatrixXd& obs,
                                        std::optional<Eigen::VectorXd> theta_init) {
    int n = int(obs.rows());
    if (n < 1) throw ConfigError("estimating equation: no observations");
    if (int(obs.cols()) != pot.dim_x())
        throw ConfigError("estimating equation: observation dimension mismatch");
    if (pot.dim_theta() != pot.dim_x())
        throw ConfigError("estimating equation: requires dim_theta == dim_x");

    const double tol = 1e-10 * n;
    const int max_iters = 100;
    Eigen::VectorXd theta = theta_init ? *theta_init : default_init(pot, obs);

    EqEval cur = eval_equation(pot, theta, obs, true);
    double gnorm = cur.g.norm();
    int iter = 0;
    while (gnorm > tol && iter < max_iters) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(cur.jac);
        if (!lu.isInvertible())
            throw SingularJacobian("estimating equation: Jacobian is singular at iteration " +
                                   std::to_string(iter));
        Eigen::VectorXd step = lu.solve(-cur.g);
        // Backtracking on the residual norm.
        double lambda = 1.0;
        Eigen::VectorXd theta_next;
        double gnorm_next = gnorm;
        for (int half = 0; half < 30; ++half) {
            theta_next = theta + lambda * step;
            double cand = eval_equation(pot, theta_next, obs, false).g.norm();
            if (cand < gnorm) {
                gnorm_next = cand;
                break;
            }
            lambda *= 0.5;
        }
        if (gnorm_next >= gnorm)
            throw NoConvergence("estimating equation: no residual decrease at iteration " +
                                std::to_string(iter));
        theta = theta_next;
        cur = eval_equation(pot, theta, obs, true);
        gnorm = cur.g.norm();
        ++iter;
    }
    if (gnorm > tol)
        throw NoConvergence("estimating equation: residual " + std::to_string(gnorm) +
                            " after " + std::to_string(iter) + " iterations");

    ThetaEstimate est;
    est.theta = theta;
    est.n_used = n;
    est.newton_iters = iter;
    est.residual_norm = gnorm;
    return est;
}

ThetaEstimate solve_offline(const ParametricPotential& pot, const SamplePath& path,
                            std::optional<Eigen::VectorXd> theta_init) {
    return solve_estimating_equation(pot, path.obs, std::move(theta_init));
}

Eigen::MatrixXd estimate_gamma(const ParametricPotential& pot, const Eigen::VectorXd& theta_hat,
                               const SamplePath& path, int lag_cutoff) {
    int n = path.n();
    int d = path.d();
    if (n < 4) throw ConfigError("estimate_gamma: too few observations");
    if (pot.dim_theta() != d) throw ConfigError("estimate_gamma: requires dim_theta == dim_x");
    if (lag_cutoff < 0) lag_cutoff = int(std::floor(std::cbrt(double(n))));
    lag_cutoff = std::min(lag_cutoff, n - 1);

    // Scores f_i = grad_x psi at the fitted parameter, centered.
    Eigen::MatrixXd f(n, d);
    Eigen::VectorXd x(d);
    Eigen::MatrixXd a_hat = Eigen::MatrixXd::Zero(d, pot.dim_theta());
    for (int i = 0; i < n; ++i) {
        x = path.obs.row(i).transpose();
        f.row(i) = pot.grad_x(theta_hat, x).transpose();
        a_hat += pot.grad_theta_grad_x(theta_hat, x);
    }
    a_hat /= double(n);
    Eigen::RowVectorXd fbar = f.colwise().mean();
    f.rowwise() -= fbar;

    // Bartlett-weighted long-run covariance of the scores.
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (int lag = 0; lag <= lag_cutoff; ++lag) {
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i + lag < n; ++i)
            c += f.row(i).transpose() * f.row(i + lag);
        c /= double(n);
        double w = 1.0 - double(lag) / double(lag_cutoff + 1);
        if (lag == 0)
            sigma += c;
        else
            sigma += w * (c + c.transpose());
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_hat);
    if (!lu.isInvertible())
        throw SingularJacobian("estimate_gamma: mean Jacobian is singular");
    Eigen::MatrixXd a_inv = lu.inverse();
    Eigen::MatrixXd gamma_sq = a_inv * sigma * a_inv.transpose();
    return psd_sqrt(gamma_sq);
}

EstimatorTrajectory online_cumulative(const ParametricPotential& pot, const BatchSet& batches) {
    if (batches.m() < 1) throw ConfigError("online_cumulative: empty batch set");
    EstimatorTrajectory traj;
    traj.scheme = "online_cumulative";
    int n = batches.length();
    int d = int(batches.batches.front().obs.cols());
    Eigen::MatrixXd pooled(size_t(batches.m()) * n, d);
    std::optional<Eigen::VectorXd> warm;
    for (int k = 0; k < batches.m(); ++k) {
        if (batches.batches[size_t(k)].n() != n)
            throw ConfigError("online_cumulative: batches have unequal lengths");
        pooled.middleRows(k * n, n) = batches.batches[size_t(k)].obs;
        auto est = solve_estimating_equation(pot, pooled.topRows((k + 1) * n), warm);
        warm = est.theta;
        traj.estimates.push_back(est.theta);
    }
    return traj;
}

EstimatorTrajectory per_batch(const ParametricPotential& pot, const BatchSet& batches) {
    if (batches.m() < 1) throw ConfigError("per_batch: empty batch set");
    EstimatorTrajectory traj;
    traj.scheme = "per_batch";
    for (const auto& b : batches.batches)
        traj.estimates.push_back(solve_estimating_equation(pot, b.obs).theta);
    return traj;
}

EstimatorTrajectory sequential(const ParametricPotential& pot, const SamplePath& path) {
    if (path.n() < 1) throw ConfigError("sequential: empty path");
    EstimatorTrajectory traj;
    traj.scheme = "sequential";
    if (pot.is_quadratic()) {
        // Running sample mean; the recursion adds (x_{k+1} - mean_k)/(k+1).
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(path.d());
        for (int k = 0; k < path.n(); ++k) {
            mean += (path.obs.row(k).transpose() - mean) / double(k + 1);
            traj.estimates.push_back(mean);
        }
        return traj;
    }
    std::optional<Eigen::VectorXd> warm;
    for (int k = 1; k <= path.n(); ++k) {
        auto est = solve_estimating_equation(pot, path.obs.topRows(k), warm);
        warm = est.theta;
        traj.estimates.push_back(est.theta);
    }
    return traj;
}

double AveragedPotential::psi(const Eigen::VectorXd& x) const {
    double s = 0.0;
    for (const auto& th : thetas) s += pot->psi(th, x);
    return s / double(thetas.size());
}

Eigen::VectorXd AveragedPotential::grad_x(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(pot->dim_x());
    for (const auto& th : thetas) g += pot->grad_x(th, x);
    return g / double(thetas.size());
}

double AveragedPotential::psi1(double x) const {
    Eigen::VectorXd xx(1);
    xx(0) = x;
    return psi(xx);
}

double AveragedPotential::grad_x1(double x) const {
    Eigen::VectorXd xx(1);
    xx(0) = x;
    return grad_x(xx)(0);
}

AveragedPotential averaged_psi(const ParametricPotential& pot,
                               const EstimatorTrajectory& per_batch_estimates, int k) {
    if (k < 1 || k > per_batch_estimates.steps())
        throw TrajectoryTooShort("averaged_psi: k = " + std::to_string(k) +
                                 " exceeds available estimates " +
                                 std::to_string(per_batch_estimates.steps()));
    AveragedPotential avg;
    avg.pot = &pot;
    avg.thetas.assign(per_batch_estimates.estimates.begin(),
                      per_batch_estimates.estimates.begin() + k);
    return avg;
}

} // namespace wgf
