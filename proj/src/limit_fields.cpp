#include "wgf/limit_fields.hpp"

#include <cmath>

namespace wgf {

NoisePath sample_brownian(const TimeGrid& time, int q, uint64_t seed, uint64_t stream) {
    if (q < 1) throw ConfigError("sample_brownian: q must be positive");
    RngStream rng(seed, stream);
    NoisePath path;
    path.time = time;
    path.q = q;
    path.kind = NoisePath::Kind::brownian;
    path.seed = seed;
    path.values.assign(size_t(time.I) + 1, Eigen::VectorXd::Zero(q));
    double sd = std::sqrt(time.dt());
    for (int i = 1; i <= time.I; ++i) {
        Eigen::VectorXd step(q);
        for (int k = 0; k < q; ++k) step(k) = sd * rng.normal();
        path.values[size_t(i)] = path.values[size_t(i - 1)] + step;
    }
    return path;
}

NoisePath coarsen_brownian(const NoisePath& fine, int factor) {
    if (fine.kind != NoisePath::Kind::brownian)
        throw ConfigError("coarsen_brownian: input must be a Brownian path");
    if (factor < 1 || fine.time.I % factor != 0)
        throw ConfigError("coarsen_brownian: factor must divide the step count");
    NoisePath coarse;
    coarse.time = TimeGrid{fine.time.T, fine.time.I / factor};
    coarse.q = fine.q;
    coarse.kind = fine.kind;
    coarse.seed = fine.seed;
    coarse.values.reserve(size_t(coarse.time.I) + 1);
    for (int i = 0; i <= coarse.time.I; ++i)
        coarse.values.push_back(fine.values[size_t(i) * size_t(factor)]);
    return coarse;
}

NoisePath fixed_gaussian_noise(const TimeGrid& time, int q, uint64_t seed, uint64_t stream) {
    if (q < 1) throw ConfigError("fixed_gaussian_noise: q must be positive");
    RngStream rng(seed, stream);
    Eigen::VectorXd z(q);
    for (int k = 0; k < q; ++k) z(k) = rng.normal();
    NoisePath path;
    path.time = time;
    path.q = q;
    path.kind = NoisePath::Kind::fixed_gaussian;
    path.seed = seed;
    path.values.assign(size_t(time.I) + 1, z);
    return path;
}

NoisePath white_noise_path(const TimeGrid& time, int q, uint64_t seed, uint64_t stream) {
    NoisePath path = sample_brownian(time, q, seed, stream);
    path.kind = NoisePath::Kind::white_increments;
    return path;
}

DensityProvider analytic_ou_density(double theta, double mu0, double var0,
                                    const Grid1D& grid, const TimeGrid& time) {
    return [=](int step, int node) {
        ScalarMoments m = ou_exact_moments(theta, mu0, var0, time.t(step));
        double x = grid.x(node) - m.mean;
        return std::exp(-0.5 * x * x / m.var) / std::sqrt(2.0 * M_PI * m.var);
    };
}

DensityProvider field_density(const FieldGrid& f) {
    return [&f](int step, int node) { return f.at(step, node); };
}

FieldGrid simulate_field(const ForcingSpec& spec, const ParametricPotential& pot,
                         const Eigen::VectorXd& theta, double beta, const Grid1D& grid,
                         const TimeGrid& time) {
    if (pot.dim_x() != 1) throw ConfigError("simulate_field: grid fields are 1-d");
    if (!(spec.noise.time == time))
        throw GridMismatch("simulate_field: noise path and field use different time grids");
    if (spec.noise.q != int(spec.tau.gamma.rows()))
        throw ConfigError("simulate_field: noise dimension does not match tau");
    bool coupled = spec.rule == ScalingRule::coupled;
    if (coupled != (spec.noise.kind == NoisePath::Kind::estimator_coupled))
        throw ConfigError("simulate_field: scaling rule does not match noise kind");

    TauField dir = spec.tau;
    if (coupled) dir.gamma = Eigen::MatrixXd::Identity(spec.noise.q, spec.noise.q);

    // Direction rows are time-independent; precompute them per node.
    std::vector<Eigen::RowVectorXd> dtau(size_t(grid.J) + 1);
    for (int j = 0; j <= grid.J; ++j) dtau[size_t(j)] = dir.grad_tau(grid.x(j));

    double nu = time.dt();
    ForcingProvider forcing = [&, nu](int step) {
        int ip = step + 1;
        Eigen::VectorXd s;
        switch (spec.rule) {
            case ScalingRule::fixed_z:
                s = spec.noise.values[size_t(ip)];
                break;
            case ScalingRule::wt_over_t: {
                // Exact step average of W(s)/s with W linearly interpolated:
                // over [t_i, t_i+1] the integrand is (W_i - m t_i)/s + m with
                // slope m, so the integral is closed form. The first step has
                // W_0 = 0 and t_0 = 0, where the integrand is constant m.
                const Eigen::VectorXd& w0 = spec.noise.values[size_t(step)];
                const Eigen::VectorXd& w1 = spec.noise.values[size_t(ip)];
                Eigen::VectorXd m = (w1 - w0) / nu;
                if (step == 0)
                    s = m;
                else
                    s = m + (w0 - time.t(step) * m) *
                                (std::log(time.t(ip) / time.t(step)) / nu);
                break;
            }
            case ScalingRule::white:
                s = (spec.noise.values[size_t(ip)] - spec.noise.values[size_t(ip - 1)]) / nu;
                break;
            case ScalingRule::coupled:
                // Stored values are the integrated per-step forcing scales.
                s = spec.noise.values[size_t(ip)] / nu;
                break;
        }
        std::vector<double> prod(size_t(grid.J) + 1);
        for (int j = 0; j <= grid.J; ++j)
            prod[size_t(j)] = spec.rho(ip, j) * dtau[size_t(j)].dot(s);
        std::vector<double> f(size_t(grid.J) + 1, 0.0);
        double h = grid.h();
        for (int j = 1; j < grid.J; ++j)
            f[size_t(j)] = (prod[size_t(j + 1)] - prod[size_t(j - 1)]) / (2.0 * h);
        return f;
    };

    DensityGrid zero(grid);
    CnOptions opts;
    opts.renormalize_each_step = false;
    DriftProvider drift = constant_drift(grid, [&](double x) {
        Eigen::VectorXd xx(1);
        xx(0) = x;
        return pot.grad_x(theta, xx)(0);
    });
    return cn_solve(zero, drift, beta, time, opts, forcing);
}

namespace {

// Midpoint quadrature of Int_0^t kernel(t - s) s^(-1) W(s) ds with W
// linearly interpolated between its nodes.
double noise_quadrature(const NoisePath& noise, double t,
                        const std::function<double(double)>& kernel, int quad_points) {
    if (noise.kind != NoisePath::Kind::brownian)
        throw ConfigError("closed-form field: noise must be a Brownian path");
    if (noise.q != 1) throw ConfigError("closed-form field: scalar noise expected");
    if (t <= 0.0 || t > noise.time.T + 1e-12)
        throw ConfigError("closed-form field: t outside the noise horizon");

    double nu = noise.time.dt();
    int pieces = quad_points > 0 ? quad_points : std::max(1, int(std::lround(t / nu)));
    double ds = t / pieces;
    auto w_at = [&](double s) {
        double u = s / nu;
        int k = std::min(int(u), noise.time.I - 1);
        double frac = u - k;
        return (1.0 - frac) * noise.values[size_t(k)](0) +
               frac * noise.values[size_t(k) + 1](0);
    };
    double acc = 0.0;
    for (int p = 0; p < pieces; ++p) {
        double s = (p + 0.5) * ds;
        acc += kernel(t - s) * w_at(s) / s;
    }
    return acc * ds;
}

} // namespace

double v1_closed_form_ou(double gamma, const NoisePath& noise, double t, double x,
                         int quad_points) {
    auto kernel = [x](double u) {
        double var = 2.0 - std::exp(-2.0 * u);
        return std::pow(var, -1.5) * std::exp(-0.5 * x * x / var);
    };
    double integral = noise_quadrature(noise, t, kernel, quad_points);
    return x * gamma / std::sqrt(2.0 * M_PI) * integral;
}

double v1_mild_form_ou(double gamma, const NoisePath& noise, double t, double x,
                       int quad_points) {
    auto kernel = [](double u) { return std::exp(-u); };
    double integral = noise_quadrature(noise, t, kernel, quad_points);
    double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return gamma * x * phi * integral;
}

NoisePath coupled_forcing_from_estimates(const EstimatorTrajectory& traj,
                                         const Eigen::VectorXd& theta, int m, double delta,
                                         const TauField& tau) {
    if (traj.steps() < 1) throw TrajectoryTooShort("coupled_forcing_from_estimates: empty trajectory");
    if (m < 1 || delta <= 0.0)
        throw ConfigError("coupled_forcing_from_estimates: need m >= 1 and delta > 0");
    if (traj.q() != int(theta.size()) || traj.q() != int(tau.gamma.rows()))
        throw ConfigError("coupled_forcing_from_estimates: dimension mismatch");

    NoisePath path;
    path.time = TimeGrid{traj.steps() * delta, traj.steps()};
    path.q = traj.q();
    path.kind = NoisePath::Kind::estimator_coupled;
    double scale = std::sqrt(double(m) * delta);
    path.values.assign(size_t(traj.steps()) + 1, Eigen::VectorXd::Zero(path.q));
    for (int i = 1; i <= traj.steps(); ++i)
        path.values[size_t(i)] = scale * (traj.estimates[size_t(i - 1)] - theta);
    return path;
}

} // namespace wgf
