#include "wgf/jko.hpp"

#include <algorithm>
#include <cmath>

namespace wgf {

const DensityGrid& JkoTrajectory::at_time(double t) const {
    double delta = opts.delta;
    int k;
    if (opts.interp == JkoOptions::Interp::ceil_index)
        k = int(std::ceil(t / delta - 1e-12));
    else
        k = int(std::floor(t / delta + 1e-12));
    k = std::clamp(k, 0, int(iterates.size()) - 1);
    return iterates[size_t(k)];
}

FieldGrid JkoTrajectory::to_field(const TimeGrid& time) const {
    if (iterates.empty()) throw TrajectoryTooShort("to_field: empty trajectory");
    FieldGrid f(iterates.front().grid, time);
    for (int i = 0; i <= time.I; ++i) {
        const DensityGrid& rho = at_time(time.t(i));
        for (int j = 0; j <= f.grid.J; ++j) f.at(i, j) = rho[j];
    }
    return f;
}

std::vector<double> alpha_field(const DensityGrid& rho_o, const DensityGrid& rho_s,
                                const StepPotential& pot, const JkoOptions& opts,
                                const Coupling& coupling) {
    check_same_grid(rho_o.grid, rho_s.grid, "alpha_field");
    const Grid1D& g = rho_o.grid;
    double h = g.h();
    std::vector<double> alpha = coupling_drift_all(coupling);
    for (int j = 1; j < g.J; ++j) {
        double dent = (rho_s[j + 1] - rho_s[j - 1]) / (2.0 * h * opts.beta);
        alpha[size_t(j)] += opts.delta * (pot.grad(g.x(j)) * rho_s[j] + dent);
    }
    alpha.front() = 0.0;
    alpha.back() = 0.0;
    return alpha;
}

namespace {

double tau_at(const JkoOptions& opts, int l) {
    // l counts inner iterations starting at 1.
    if (opts.schedule == JkoOptions::Schedule::inv_log)
        return opts.tau0 / std::log(1.0 + double(l));
    return opts.tau0 / double(l);
}

double l1_norm(const Grid1D& g, const std::vector<double>& f) {
    std::vector<double> a(f.size());
    for (size_t j = 0; j < f.size(); ++j) a[j] = std::fabs(f[j]);
    return trapezoid(g, a);
}

double l2_norm(const Grid1D& g, const std::vector<double>& f) {
    std::vector<double> a(f.size());
    for (size_t j = 0; j < f.size(); ++j) a[j] = f[j] * f[j];
    return std::sqrt(trapezoid(g, a));
}

// Values of the descent update at the displaced points y_j + tau xi_j are
// known from the volume distortion of the push-forward; this recovers node
// values. Where the displacement map degenerates it falls back to sampling
// the pushed density at the nearest preimage node.
DensityGrid pushforward_nodes(const DensityGrid& rho, const std::vector<double>& xi,
                              double tau) {
    const Grid1D& g = rho.grid;
    double h = g.h();
    int J = g.J;

    // Pushed values L_j = rho_tau(y_j + tau xi_j).
    std::vector<double> L(size_t(J) + 1, 0.0);
    for (int j = 1; j < J; ++j) {
        double stretch = 1.0 + tau * (xi[size_t(j + 1)] - xi[size_t(j - 1)]) / (2.0 * h);
        if (stretch > 0.05)
            L[size_t(j)] = rho[j] / stretch;
        else
            L[size_t(j)] = rho[j];
    }

    DensityGrid out(g);
    for (int j = 1; j < J; ++j) {
        double den = 2.0 * h + tau * (xi[size_t(j + 1)] - xi[size_t(j - 1)]);
        if (std::fabs(den) >= h) {
            out[j] = L[size_t(j)] - tau * xi[size_t(j)] * (L[size_t(j + 1)] - L[size_t(j - 1)]) / den;
        } else {
            int k = std::clamp(int(std::lround(j - tau * xi[size_t(j)] / h)), 0, J);
            out[j] = L[size_t(k)];
        }
        out[j] = std::max(out[j], 0.0);
    }
    renormalize_in_place(out);
    return out;
}

} // namespace

std::pair<DensityGrid, JkoStepDiag> jko_step(const DensityGrid& rho_o,
                                             const StepPotential& pot,
                                             const JkoOptions& opts) {
    const Grid1D& g = rho_o.grid;
    JkoStepDiag diag;
    diag.band_used = std::max(opts.band, 0);

    DensityGrid cur = rho_o;
    DensityGrid prev = rho_o;
    DensityGrid probe = rho_o; // extrapolated iterate the field is evaluated at
    int band = diag.band_used;

    for (int l = 0; l < opts.max_inner; ++l) {
        if (opts.nesterov && l > 0) {
            double mom = double(l - 1) / double(l + 2);
            for (int j = 0; j <= g.J; ++j)
                probe[j] = std::max(cur[j] + mom * (cur[j] - prev[j]), 0.0);
            renormalize_in_place(probe);
        } else {
            probe = cur;
        }

        Coupling coupling = banded_coupling_widening(rho_o, probe, band);
        band = std::max(band, coupling.w);
        std::vector<double> alpha = alpha_field(rho_o, probe, pot, opts, coupling);
        diag.alpha_l1 = l1_norm(g, alpha);
        diag.inner_iters = l;
        if (diag.alpha_l1 < opts.kappa) {
            diag.band_used = band;
            diag.w2_sq = w2_histogram(rho_o, probe);
            diag.free_energy = free_energy(probe, pot.psi, opts.beta);
            return {probe, diag};
        }

        double nrm = l2_norm(g, alpha);
        if (nrm == 0.0) break;
        std::vector<double> xi(alpha.size());
        for (size_t j = 0; j < xi.size(); ++j) xi[j] = -alpha[j] / nrm;

        DensityGrid next = pushforward_nodes(probe, xi, tau_at(opts, l + 1));
        prev = cur;
        cur = next;
    }

    diag.stalled = diag.alpha_l1 >= 10.0 * opts.kappa;
    diag.band_used = band;
    diag.w2_sq = w2_histogram(rho_o, probe);
    diag.free_energy = free_energy(probe, pot.psi, opts.beta);
    return {probe, diag};
}

JkoTrajectory run_plain(const DensityGrid& rho0, const StepPotential& pot,
                        const JkoOptions& opts, double T) {
    if (T <= 0.0 || opts.delta <= 0.0) throw ConfigError("run_plain: need T > 0 and delta > 0");
    int steps = int(std::ceil(T / opts.delta - 1e-12));
    JkoTrajectory traj;
    traj.opts = opts;
    traj.iterates.push_back(renormalize(rho0));
    for (int k = 0; k < steps; ++k) {
        auto [rho, diag] = jko_step(traj.iterates.back(), pot, opts);
        traj.iterates.push_back(std::move(rho));
        traj.diags.push_back(diag);
    }
    return traj;
}

StepPotential step_potential(const ParametricPotential& pot, const Eigen::VectorXd& theta) {
    if (pot.dim_x() != 1) throw ConfigError("step_potential: grid solver is 1-d");
    return StepPotential{
        [&pot, theta](double x) {
            Eigen::VectorXd xx(1);
            xx(0) = x;
            return pot.psi(theta, xx);
        },
        [&pot, theta](double x) {
            Eigen::VectorXd xx(1);
            xx(0) = x;
            return pot.grad_x(theta, xx)(0);
        }};
}

JkoTrajectory run_offline(const DensityGrid& rho0, const ParametricPotential& pot,
                          const Eigen::VectorXd& theta_hat, const JkoOptions& opts, double T) {
    return run_plain(rho0, step_potential(pot, theta_hat), opts, T);
}

JkoTrajectory run_online(const DensityGrid& rho0, const ParametricPotential& pot,
                         const EstimatorTrajectory& estimates, OnlineScheme scheme,
                         const JkoOptions& opts, double T) {
    if (T <= 0.0 || opts.delta <= 0.0) throw ConfigError("run_online: need T > 0 and delta > 0");
    int steps = int(std::ceil(T / opts.delta - 1e-12));
    if (estimates.steps() < steps)
        throw TrajectoryTooShort("run_online: " + std::to_string(estimates.steps()) +
                                 " estimates for " + std::to_string(steps) + " steps");

    JkoTrajectory traj;
    traj.opts = opts;
    traj.iterates.push_back(renormalize(rho0));
    for (int k = 0; k < steps; ++k) {
        StepPotential sp;
        if (scheme == OnlineScheme::averaged) {
            AveragedPotential avg;
            avg.pot = &pot;
            avg.thetas.assign(estimates.estimates.begin(), estimates.estimates.begin() + k + 1);
            sp.psi = [avg](double x) { return avg.psi1(x); };
            sp.grad = [avg](double x) { return avg.grad_x1(x); };
        } else {
            sp = step_potential(pot, estimates.estimates[size_t(k)]);
        }
        auto [rho, diag] = jko_step(traj.iterates.back(), sp, opts);
        traj.iterates.push_back(std::move(rho));
        traj.diags.push_back(diag);
    }
    return traj;
}

} // namespace wgf
