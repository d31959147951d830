#include "wgf/bures.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace wgf {

void GaussianState::validate() const {
    if (sigma.rows() != sigma.cols() || sigma.rows() != mu.size())
        throw ConfigError("gaussian state: inconsistent dimensions");
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("gaussian state: covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw LostPositiveDefiniteness("gaussian state: covariance not positive definite");
}

GaussHermite GaussHermite::build(int order) {
    if (order < 1) throw ConfigError("gauss-hermite: order must be positive");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // recurrence (off-diagonal sqrt(k)).
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        double b = std::sqrt(double(k));
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussHermite gh;
    gh.nodes = es.eigenvalues();
    gh.weights.resize(order);
    for (int k = 0; k < order; ++k) {
        double v0 = es.eigenvectors()(0, k);
        gh.weights(k) = v0 * v0;
    }
    return gh;
}

namespace {

// Applies fn(x, weight) over the tensor quadrature of N(mu, sigma).
template <typename F>
void gaussian_quadrature(const GaussianState& state, int gh_order, F&& fn) {
    int d = state.dim();
    if (d > 3) throw DimensionTooLarge("gaussian quadrature supports d <= 3");
    Eigen::LLT<Eigen::MatrixXd> llt(state.sigma);
    if (llt.info() != Eigen::Success)
        throw LostPositiveDefiniteness("gaussian quadrature: covariance not positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    GaussHermite gh = GaussHermite::build(gh_order);

    Eigen::VectorXd z(d), x(d);
    std::vector<int> idx(size_t(d), 0);
    for (;;) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            z(k) = gh.nodes(idx[size_t(k)]);
            w *= gh.weights(idx[size_t(k)]);
        }
        x = state.mu + L * z;
        fn(x, w);
        int k = 0;
        while (k < d && ++idx[size_t(k)] == gh_order) {
            idx[size_t(k)] = 0;
            ++k;
        }
        if (k == d) break;
    }
}

} // namespace

GaussianExpectations gaussian_expectations(const ParametricPotential& pot,
                                           const Eigen::VectorXd& theta,
                                           const GaussianState& state, int gh_order) {
    if (pot.dim_x() != state.dim())
        throw ConfigError("gaussian_expectations: potential dimension mismatch");
    state.validate();
    int d = state.dim();
    GaussianExpectations e;
    e.e_grad = Eigen::VectorXd::Zero(d);
    e.e_grad_cross = Eigen::MatrixXd::Zero(d, d);
    gaussian_quadrature(state, gh_order, [&](const Eigen::VectorXd& x, double w) {
        Eigen::VectorXd g = pot.grad_x(theta, x);
        e.e_grad += w * g;
        e.e_grad_cross += w * g * (x - state.mu).transpose();
    });
    return e;
}

namespace {

struct BwRhs {
    Eigen::VectorXd dmu;
    Eigen::MatrixXd dsigma;
};

BwRhs flow_rhs(const ParametricPotential& pot, const Eigen::VectorXd& theta,
               const GaussianState& s, double beta, int gh_order) {
    GaussianExpectations e = gaussian_expectations(pot, theta, s, gh_order);
    BwRhs r;
    r.dmu = -e.e_grad;
    r.dsigma = (2.0 / beta) * Eigen::MatrixXd::Identity(s.dim(), s.dim()) -
               (e.e_grad_cross + e.e_grad_cross.transpose());
    return r;
}

} // namespace

BwTrajectory bw_ode_integrate(const ParametricPotential& pot, const ThetaSchedule& theta_of_t,
                              const GaussianState& state0, double T, double dt,
                              double beta, int gh_order) {
    if (T <= 0.0 || dt <= 0.0) throw ConfigError("bw_ode_integrate: need T > 0 and dt > 0");
    state0.validate();
    int steps = int(std::lround(T / dt));
    if (steps < 1) throw ConfigError("bw_ode_integrate: horizon shorter than one step");

    BwTrajectory traj;
    traj.reserve(size_t(steps) + 1);
    GaussianState s = state0;
    traj.push_back({0.0, s});
    for (int i = 0; i < steps; ++i) {
        double t = i * dt;
        auto stage = [&](double at, const GaussianState& base, const BwRhs& k, double frac) {
            GaussianState g;
            g.mu = base.mu + frac * dt * k.dmu;
            g.sigma = base.sigma + frac * dt * k.dsigma;
            g.sigma = 0.5 * (g.sigma + g.sigma.transpose());
            return std::pair<double, GaussianState>{at, g};
        };
        BwRhs k1 = flow_rhs(pot, theta_of_t(t), s, beta, gh_order);
        auto [t2, s2] = stage(t + 0.5 * dt, s, k1, 0.5);
        BwRhs k2 = flow_rhs(pot, theta_of_t(t2), s2, beta, gh_order);
        auto [t3, s3] = stage(t + 0.5 * dt, s, k2, 0.5);
        BwRhs k3 = flow_rhs(pot, theta_of_t(t3), s3, beta, gh_order);
        auto [t4, s4] = stage(t + dt, s, k3, 1.0);
        BwRhs k4 = flow_rhs(pot, theta_of_t(t4), s4, beta, gh_order);

        s.mu += dt / 6.0 * (k1.dmu + 2.0 * k2.dmu + 2.0 * k3.dmu + k4.dmu);
        s.sigma += dt / 6.0 * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma);
        s.sigma = 0.5 * (s.sigma + s.sigma.transpose());
        s.validate();
        traj.push_back({(i + 1) * dt, s});
    }
    return traj;
}

BwTrajectory bw_ode_integrate(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                              const GaussianState& state0, double T, double dt,
                              double beta, int gh_order) {
    return bw_ode_integrate(
        pot, [&theta](double) { return theta; }, state0, T, dt, beta, gh_order);
}

GaussianState bw_jko_step(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          const GaussianState& state0, double delta, double beta,
                          int gh_order) {
    if (delta <= 0.0) throw ConfigError("bw_jko_step: delta must be positive");
    state0.validate();
    int d = state0.dim();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);

    GaussianState cur = state0;
    double damping = 1.0;
    double prev_change = std::numeric_limits<double>::infinity();
    const int max_iters = 200;
    for (int it = 0; it < max_iters; ++it) {
        GaussianExpectations e = gaussian_expectations(pot, theta, cur, gh_order);
        Eigen::LLT<Eigen::MatrixXd> llt(cur.sigma);
        if (llt.info() != Eigen::Success)
            throw LostPositiveDefiniteness("bw_jko_step: iterate covariance degenerate");
        Eigen::MatrixXd sigma_inv = llt.solve(eye);
        // E[hess psi] from the cross moment: E[grad psi (X-mu)'] sigma^-1.
        Eigen::MatrixXd hess = e.e_grad_cross * sigma_inv;
        hess = 0.5 * (hess + hess.transpose());

        Eigen::MatrixXd M = eye + delta * (hess - sigma_inv / beta);
        Eigen::LLT<Eigen::MatrixXd> mllt(M);
        if (mllt.info() != Eigen::Success)
            throw LostPositiveDefiniteness("bw_jko_step: transport factor not positive definite");
        Eigen::MatrixXd m_inv = mllt.solve(eye);

        GaussianState next;
        next.mu = state0.mu - delta * e.e_grad;
        next.sigma = m_inv * state0.sigma * m_inv;
        next.sigma = 0.5 * (next.sigma + next.sigma.transpose());

        double change = (next.mu - cur.mu).norm() + (next.sigma - cur.sigma).norm();
        if (!std::isfinite(change))
            throw FixedPointDiverged("bw_jko_step: iteration produced non-finite state");
        if (change > prev_change && damping > 1e-3) damping *= 0.5;
        cur.mu += damping * (next.mu - cur.mu);
        cur.sigma += damping * (next.sigma - cur.sigma);
        cur.sigma = 0.5 * (cur.sigma + cur.sigma.transpose());
        prev_change = change;
        if (change < 1e-12) {
            cur.validate();
            return cur;
        }
    }
    throw FixedPointDiverged("bw_jko_step: no contraction after " + std::to_string(max_iters) +
                             " iterations");
}

BwTrajectory bw_jko_run(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                        const GaussianState& state0, double delta, int steps, double beta,
                        int gh_order) {
    if (steps < 1) throw ConfigError("bw_jko_run: need at least one step");
    BwTrajectory traj;
    traj.reserve(size_t(steps) + 1);
    GaussianState s = state0;
    traj.push_back({0.0, s});
    for (int k = 1; k <= steps; ++k) {
        s = bw_jko_step(pot, theta, s, delta, beta, gh_order);
        traj.push_back({k * delta, s});
    }
    return traj;
}

namespace {

struct LimitRhs {
    Eigen::VectorXd dv_mu;
    Eigen::MatrixXd dv_sigma;
};

// Right side of the linear perturbation system at one time, given the
// unperturbed state p = N(mu, sigma) and the forcing vector s.
LimitRhs limit_rhs(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                   const TauField& tau, const GaussianState& p, const BwLimitState& v,
                   const Eigen::VectorXd& s, int gh_order) {
    int d = p.dim();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(p.sigma);
    if (llt.info() != Eigen::Success)
        throw LostPositiveDefiniteness("limit system: covariance degenerate");
    Eigen::MatrixXd sigma_inv = llt.solve(eye);
    Eigen::MatrixXd qform = sigma_inv * v.v_sigma * sigma_inv;
    double trace_term = (sigma_inv * v.v_sigma).trace();

    Eigen::VectorXd i1 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd i2 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd e_grad = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd i3 = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd i5 = Eigen::MatrixXd::Zero(d, d);

    gaussian_quadrature(p, gh_order, [&](const Eigen::VectorXd& x, double w) {
        Eigen::VectorXd c = x - p.mu;
        Eigen::VectorXd g = pot.grad_x(theta, x);
        Eigen::VectorXd dts = pot.grad_theta_grad_x(theta, x) * tau.gamma * s;
        // Density derivatives contracted with (v_mu, v_sigma), divided by p:
        // grad_mu log p . v_mu and grad_sigma log p . v_sigma.
        double lin = c.dot(sigma_inv * v.v_mu);
        double quad = 0.5 * (c.dot(qform * c) - trace_term);
        double mix = lin + quad;
        i1 += w * dts;
        e_grad += w * g;
        i2 += w * mix * g;
        i3 += w * dts * c.transpose();
        i5 += w * mix * g * c.transpose();
    });

    LimitRhs r;
    r.dv_mu = -i1 - i2;
    Eigen::MatrixXd m1 = i3 - e_grad * v.v_mu.transpose();
    r.dv_sigma = -m1 - i5 - m1.transpose() - i5.transpose();
    return r;
}

} // namespace

std::vector<std::pair<double, BwLimitState>> bw_limit_integrate(
    BwSystem system, const ParametricPotential& pot, const Eigen::VectorXd& theta,
    const TauField& tau, const BwTrajectory& p_half, const NoisePath& noise, double T,
    double dt, int gh_order) {
    if (T <= 0.0 || dt <= 0.0) throw ConfigError("bw_limit_integrate: need T > 0 and dt > 0");
    int steps = int(std::lround(T / dt));
    if (int(p_half.size()) != 2 * steps + 1)
        throw ConfigError("bw_limit_integrate: state trajectory must sample at dt/2 spacing");
    int d = pot.dim_x();
    int q = int(tau.gamma.rows());

    if (system == BwSystem::ode_fixed_z) {
        if (noise.kind != NoisePath::Kind::fixed_gaussian)
            throw ConfigError("bw_limit_integrate: ode system expects fixed_gaussian noise");
    } else {
        if (noise.kind != NoisePath::Kind::brownian)
            throw ConfigError("bw_limit_integrate: sde system expects brownian noise");
        if (noise.time.I != steps || std::fabs(noise.time.T - T) > 1e-12)
            throw GridMismatch("bw_limit_integrate: noise grid must match {T, T/dt}");
    }
    if (noise.q != q) throw ConfigError("bw_limit_integrate: noise dimension mismatch");

    BwLimitState v;
    v.v_mu = Eigen::VectorXd::Zero(d);
    v.v_sigma = Eigen::MatrixXd::Zero(d, d);
    std::vector<std::pair<double, BwLimitState>> out;
    out.reserve(size_t(steps) + 1);
    out.push_back({0.0, v});

    for (int i = 0; i < steps; ++i) {
        double t = i * dt;
        if (system == BwSystem::ode_fixed_z) {
            const Eigen::VectorXd& z = noise.values[0];
            auto add = [&](const BwLimitState& base, const LimitRhs& k, double frac) {
                BwLimitState g;
                g.v_mu = base.v_mu + frac * dt * k.dv_mu;
                g.v_sigma = base.v_sigma + frac * dt * k.dv_sigma;
                return g;
            };
            const GaussianState& p0 = p_half[size_t(2 * i)].second;
            const GaussianState& pm = p_half[size_t(2 * i + 1)].second;
            const GaussianState& p1 = p_half[size_t(2 * i + 2)].second;
            LimitRhs k1 = limit_rhs(pot, theta, tau, p0, v, z, gh_order);
            LimitRhs k2 = limit_rhs(pot, theta, tau, pm, add(v, k1, 0.5), z, gh_order);
            LimitRhs k3 = limit_rhs(pot, theta, tau, pm, add(v, k2, 0.5), z, gh_order);
            LimitRhs k4 = limit_rhs(pot, theta, tau, p1, add(v, k3, 1.0), z, gh_order);
            v.v_mu += dt / 6.0 *
                      (k1.dv_mu + 2.0 * k2.dv_mu + 2.0 * k3.dv_mu + k4.dv_mu);
            v.v_sigma += dt / 6.0 *
                         (k1.dv_sigma + 2.0 * k2.dv_sigma + 2.0 * k3.dv_sigma + k4.dv_sigma);
        } else {
            // Forward Euler; the W(t)/t forcing is evaluated at the end of
            // the step so the first step uses W(dt)/dt.
            double t_end = (i + 1) * dt;
            Eigen::VectorXd s = noise.values[size_t(i + 1)] / t_end;
            const GaussianState& p0 = p_half[size_t(2 * i)].second;
            LimitRhs k = limit_rhs(pot, theta, tau, p0, v, s, gh_order);
            v.v_mu += dt * k.dv_mu;
            v.v_sigma += dt * k.dv_sigma;
        }
        v.v_sigma = 0.5 * (v.v_sigma + v.v_sigma.transpose());
        out.push_back({t + dt, v});
    }
    return out;
}

void write_bw_csv(const std::filesystem::path& file, const BwTrajectory& traj) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    if (traj.empty()) throw ConfigError("write_bw_csv: empty trajectory");
    int d = traj.front().second.dim();
    out << 't';
    for (int i = 0; i < d; ++i) out << ",mu_" << (i + 1);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ",sigma_" << (i + 1) << (j + 1);
    out << '\n';
    for (const auto& [t, s] : traj) {
        out << format_double(t);
        for (int i = 0; i < d; ++i) out << ',' << format_double(s.mu(i));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out << ',' << format_double(s.sigma(i, j));
        out << '\n';
    }
}

} // namespace wgf
