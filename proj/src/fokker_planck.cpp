#include "wgf/fokker_planck.hpp"

#include <cmath>

namespace wgf {

DriftProvider constant_drift(const Grid1D& grid, const std::function<double(double)>& b) {
    std::vector<double> vals(size_t(grid.J) + 1);
    for (int j = 0; j <= grid.J; ++j) vals[size_t(j)] = b(grid.x(j));
    return [vals](int) { return vals; };
}

void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                  std::vector<double>& upper, std::vector<double>& rhs) {
    size_t n = diag.size();
    for (size_t k = 1; k < n; ++k) {
        if (std::fabs(diag[k - 1]) < 1e-300)
            throw SolverBreakdown("thomas_solve: vanishing pivot");
        double m = lower[k] / diag[k - 1];
        diag[k] -= m * upper[k - 1];
        rhs[k] -= m * rhs[k - 1];
    }
    if (std::fabs(diag[n - 1]) < 1e-300)
        throw SolverBreakdown("thomas_solve: vanishing pivot");
    rhs[n - 1] /= diag[n - 1];
    for (size_t k = n - 1; k-- > 0;)
        rhs[k] = (rhs[k] - upper[k] * rhs[k + 1]) / diag[k];
}

FieldGrid cn_solve(const DensityGrid& rho0, const DriftProvider& drift, double beta,
                   const TimeGrid& time, const CnOptions& opts, const ForcingProvider& forcing) {
    if (beta <= 0.0) throw ConfigError("cn_solve: beta must be positive");
    const Grid1D& g = rho0.grid;
    if (g.J < 4) throw ConfigError("cn_solve: grid too coarse");

    const int J = g.J;
    const double h = g.h();
    const double dt = time.dt();
    const double dif = 1.0 / (beta * h * h);

    FieldGrid out(g, time);
    std::vector<double> v = rho0.v;
    v.front() = 0.0;
    v.back() = 0.0;
    for (int j = 0; j <= J; ++j) out.at(0, j) = v[size_t(j)];

    // Interior unknowns j = 1..J-1.
    const size_t m = size_t(J) - 1;
    std::vector<double> lower(m), diag(m), upper(m), rhs(m);

    for (int i = 0; i < time.I; ++i) {
        std::vector<double> b = drift(i);
        if (int(b.size()) != J + 1) throw GridMismatch("cn_solve: drift size mismatch");

        // Rows of L: (L v)_j = (b_{j+1} v_{j+1} - b_{j-1} v_{j-1}) / (2h)
        //                      + (v_{j+1} - 2 v_j + v_{j-1}) / (beta h^2).
        auto lo = [&](int j) { return -b[size_t(j - 1)] / (2.0 * h) + dif; };
        auto di = [&](int) { return -2.0 * dif; };
        auto up = [&](int j) { return b[size_t(j + 1)] / (2.0 * h) + dif; };

        std::vector<double> f;
        if (forcing) {
            f = forcing(i);
            if (int(f.size()) != J + 1) throw GridMismatch("cn_solve: forcing size mismatch");
        }

        for (size_t k = 0; k < m; ++k) {
            int j = int(k) + 1;
            double lj = lo(j), dj = di(j), uj = up(j);
            lower[k] = -0.5 * dt * lj;
            diag[k] = 1.0 - 0.5 * dt * dj;
            upper[k] = -0.5 * dt * uj;
            double lv = lj * v[size_t(j - 1)] + dj * v[size_t(j)] + uj * v[size_t(j + 1)];
            rhs[k] = v[size_t(j)] + 0.5 * dt * lv;
            if (forcing) rhs[k] += dt * f[size_t(j)];
        }
        thomas_solve(lower, diag, upper, rhs);

        double maxabs = 0.0;
        for (size_t k = 0; k < m; ++k) {
            v[k + 1] = rhs[k];
            maxabs = std::max(maxabs, std::fabs(rhs[k]));
        }
        if (!std::isfinite(maxabs) || maxabs > opts.diverge_guard)
            throw Diverged("cn_solve: solution exceeded guard at step " + std::to_string(i + 1));

        if (opts.renormalize_each_step) {
            double total = trapezoid(g, v);
            if (!std::isfinite(total) || total <= 0.0)
                throw AllMassLost("cn_solve: mass lost at step " + std::to_string(i + 1));
            for (double& val : v) val /= total;
        }
        for (int j = 0; j <= J; ++j) out.at(i + 1, j) = v[size_t(j)];
    }
    return out;
}

} // namespace wgf
