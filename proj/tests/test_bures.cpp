#include <doctest.h>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgf/bures.hpp"
#include "wgf/errors.hpp"
#include "wgf/fokker_planck.hpp"
#include "wgf/langevin.hpp"
#include "wgf/limit_fields.hpp"
#include "wgf/potential.hpp"
#include "test_support.hpp"

namespace {

wgf::GaussianState state1(double mu, double var) {
    wgf::GaussianState s;
    s.mu = Eigen::VectorXd::Constant(1, mu);
    s.sigma = Eigen::MatrixXd::Constant(1, 1, var);
    return s;
}

} // namespace

TEST_CASE("gauss-hermite rules integrate normal moments exactly") {
    wgf::GaussHermite gh = wgf::GaussHermite::build(6);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
    for (int i = 0; i < gh.nodes.size(); ++i) {
        double x = gh.nodes(i), w = gh.weights(i);
        m0 += w;
        m2 += w * x * x;
        m4 += w * x * x * x * x;
        m6 += w * std::pow(x, 6.0);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
    CHECK_THROWS_AS(wgf::GaussHermite::build(0), wgf::ConfigError);
}

TEST_CASE("gaussian expectations are exact for quadratic potentials") {
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 0.4, 0.4, 1.2;
    wgf::QuadraticPotential pot(a);
    Eigen::VectorXd theta(2);
    theta << 0.5, -0.3;
    wgf::GaussianState s;
    s.mu = Eigen::VectorXd::Zero(2);
    s.mu << 1.0, 0.2;
    s.sigma = Eigen::MatrixXd::Zero(2, 2);
    s.sigma << 0.7, 0.2, 0.2, 0.5;

    wgf::GaussianExpectations e = wgf::gaussian_expectations(pot, theta, s, 8);
    Eigen::VectorXd want_grad = a * (s.mu - theta);
    Eigen::MatrixXd want_cross = a * s.sigma;
    CHECK((e.e_grad - want_grad).norm() < 1e-10);
    CHECK((e.e_grad_cross - want_cross).norm() < 1e-10);
}

TEST_CASE("gaussian expectations match the cubic moment formula for the double well") {
    wgf::DoubleWellPotential pot;
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.8);
    wgf::GaussianState s = state1(0.6, 0.3);
    wgf::GaussianExpectations e = wgf::gaussian_expectations(pot, theta, s, 12);
    // E[(X^2 - theta) X] = mu^3 + 3 mu var - theta mu for X ~ N(mu, var).
    double mu = 0.6, var = 0.3;
    double want = mu * mu * mu + 3.0 * mu * var - 0.8 * mu;
    CHECK(e.e_grad(0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("dimension guard rejects quadrature beyond three axes") {
    wgf::QuadraticPotential pot(4);
    wgf::GaussianState s;
    s.mu = Eigen::VectorXd::Zero(4);
    s.sigma = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(wgf::gaussian_expectations(pot, Eigen::VectorXd::Zero(4), s, 8),
                    wgf::DimensionTooLarge);
}

TEST_CASE("state validation flags shape, symmetry, and definiteness") {
    wgf::GaussianState ok = state1(0.0, 1.0);
    CHECK_NOTHROW(ok.validate());

    wgf::GaussianState shape = ok;
    shape.sigma = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(shape.validate(), wgf::ConfigError);

    wgf::GaussianState asym;
    asym.mu = Eigen::VectorXd::Zero(2);
    asym.sigma = Eigen::MatrixXd::Identity(2, 2);
    asym.sigma(0, 1) = 0.3;
    CHECK_THROWS_AS(asym.validate(), wgf::ConfigError);

    wgf::GaussianState indef = state1(0.0, -0.5);
    CHECK_THROWS_AS(indef.validate(), wgf::LostPositiveDefiniteness);
}

TEST_CASE("mean and covariance flow matches the exact scalar relaxation") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.4);
    wgf::BwTrajectory traj = wgf::bw_ode_integrate(pot, theta, state1(1.5, 0.25), 1.0, 0.01);
    double worst = 0.0;
    for (const auto& [t, s] : traj) {
        wgf::ScalarMoments m = wgf::ou_exact_moments(0.4, 1.5, 0.25, t);
        worst = std::max(worst, std::abs(s.mu(0) - m.mean));
        worst = std::max(worst, std::abs(s.sigma(0, 0) - m.var));
    }
    MESSAGE("ode max error ", worst);
    CHECK(worst < 1e-6);
}

TEST_CASE("decoupled two-dimensional flow relaxes componentwise") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 2.5;
    wgf::QuadraticPotential pot(a);
    Eigen::VectorXd theta(2);
    theta << 0.2, -0.1;
    wgf::GaussianState s0;
    s0.mu = Eigen::VectorXd::Zero(2);
    s0.mu << 1.0, 0.5;
    s0.sigma = Eigen::MatrixXd::Identity(2, 2) * 0.25;

    wgf::BwTrajectory traj = wgf::bw_ode_integrate(pot, theta, s0, 0.8, 0.01, 1.0, 10);
    double worst = 0.0;
    for (const auto& [t, s] : traj) {
        for (int i = 0; i < 2; ++i) {
            double ai = a(i, i);
            double mean = theta(i) + (s0.mu(i) - theta(i)) * std::exp(-ai * t);
            double var =
                1.0 / ai + (0.25 - 1.0 / ai) * std::exp(-2.0 * ai * t);
            worst = std::max(worst, std::abs(s.mu(i) - mean));
            worst = std::max(worst, std::abs(s.sigma(i, i) - var));
        }
        CHECK(std::abs(s.sigma(0, 1)) < 1e-8);
    }
    MESSAGE("2-d ode max error ", worst);
    CHECK(worst < 1e-6);
}

TEST_CASE("proximal step fixes the gibbs state and tracks explicit euler") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.3);

    wgf::GaussianState gibbs = state1(0.3, 1.0);
    wgf::GaussianState still = wgf::bw_jko_step(pot, theta, gibbs, 0.05);
    CHECK(std::abs(still.mu(0) - 0.3) < 1e-10);
    CHECK(std::abs(still.sigma(0, 0) - 1.0) < 1e-10);

    // One proximal step deviates from explicit Euler at second order.
    wgf::GaussianState s0 = state1(1.2, 0.5);
    auto euler_gap = [&](double delta) {
        wgf::GaussianState prox = wgf::bw_jko_step(pot, theta, s0, delta);
        wgf::GaussianExpectations e = wgf::gaussian_expectations(pot, theta, s0, 20);
        double mu_e = s0.mu(0) - delta * e.e_grad(0);
        double sig_e = s0.sigma(0, 0) +
                       delta * (2.0 - e.e_grad_cross(0, 0) - e.e_grad_cross(0, 0));
        return std::abs(prox.mu(0) - mu_e) + std::abs(prox.sigma(0, 0) - sig_e);
    };
    double g1 = euler_gap(1e-2);
    double g2 = euler_gap(1e-3);
    MESSAGE("euler gaps ", g1, " vs ", g2, " ratio ", g1 / g2);
    CHECK(g1 / g2 > 25.0);
    CHECK(g1 / g2 < 400.0);
}

TEST_CASE("proximal trajectory converges to the flow at first order") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    wgf::GaussianState s0 = state1(1.0, 0.25);

    auto max_error = [&](double delta) {
        int steps = int(std::lround(0.4 / delta));
        wgf::BwTrajectory traj = wgf::bw_jko_run(pot, theta, s0, delta, steps);
        double worst = 0.0;
        for (const auto& [t, s] : traj) {
            wgf::ScalarMoments m = wgf::ou_exact_moments(0.0, 1.0, 0.25, t);
            worst = std::max(worst, std::abs(s.mu(0) - m.mean));
            worst = std::max(worst, std::abs(s.sigma(0, 0) - m.var));
        }
        return worst;
    };
    double e1 = max_error(0.04), e2 = max_error(0.02);
    MESSAGE("proximal errors ", e1, " -> ", e2, " ratio ", e1 / e2);
    CHECK(e1 / e2 > 1.6);
    CHECK(e1 / e2 < 2.6);
}

TEST_CASE("gaussian flow marginals agree with the grid solver") {
    // Dual route: the same relaxation computed by the grid solver and by the
    // mean/covariance system must coincide.
    wgf::Grid1D g{8.0, 3200};
    wgf::TimeGrid tg{0.5, 1000};
    wgf::DensityGrid rho0(g);
    for (int j = 0; j <= g.J; ++j) rho0[j] = testutil::normal_pdf(g.x(j), 1.0, 0.25);
    wgf::renormalize_in_place(rho0);
    wgf::FieldGrid sol = wgf::cn_solve(
        rho0, wgf::constant_drift(g, [](double x) { return x; }), 1.0, tg);

    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    wgf::BwTrajectory ode =
        wgf::bw_ode_integrate(pot, theta, state1(1.0, 0.25), 0.5, tg.dt());

    for (int i : {500, 1000}) {
        wgf::DensityGrid slice = sol.slice(i);
        std::vector<double> xs(size_t(g.J) + 1), x2s(size_t(g.J) + 1);
        for (int j = 0; j <= g.J; ++j) {
            xs[size_t(j)] = g.x(j) * slice[j];
            x2s[size_t(j)] = g.x(j) * g.x(j) * slice[j];
        }
        double mean = wgf::trapezoid(g, xs);
        double var = wgf::trapezoid(g, x2s) - mean * mean;
        const wgf::GaussianState& s = ode[size_t(i)].second;
        MESSAGE("t=", tg.t(i), " grid (", mean, ", ", var, ") ode (", s.mu(0), ", ",
                s.sigma(0, 0), ")");
        CHECK(std::abs(mean - s.mu(0)) < 1e-4);
        CHECK(std::abs(var - s.sigma(0, 0)) < 1e-4);
    }
}

TEST_CASE("stationary perturbation system has the exponential closed form") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    double gamma = std::sqrt(wgf::ou_gamma_sq(1.0));
    wgf::TauField tau;
    tau.pot = &pot;
    tau.theta = theta;
    tau.gamma = Eigen::MatrixXd::Constant(1, 1, gamma);

    const double T = 0.5, dt = 0.01;
    int steps = int(std::lround(T / dt));
    wgf::BwTrajectory p_half =
        wgf::bw_ode_integrate(pot, theta, state1(0.0, 1.0), T, dt / 2.0);
    REQUIRE(int(p_half.size()) == 2 * steps + 1);

    wgf::NoisePath z = wgf::fixed_gaussian_noise(wgf::TimeGrid{T, steps}, 1, 77, 0);
    auto limit = wgf::bw_limit_integrate(wgf::BwSystem::ode_fixed_z, pot, theta, tau, p_half,
                                         z, T, dt);
    REQUIRE(int(limit.size()) == steps + 1);
    double zval = z.values[0](0);
    double worst = 0.0;
    for (const auto& [t, v] : limit) {
        double want = gamma * zval * (1.0 - std::exp(-t));
        worst = std::max(worst, std::abs(v.v_mu(0) - want));
        worst = std::max(worst, std::abs(v.v_sigma(0, 0)));
    }
    MESSAGE("stationary limit error ", worst);
    CHECK(worst < 1e-6);
}

TEST_CASE("limit system is the directional derivative of the flow") {
    // Central-difference oracle on a moving base flow: perturbing the
    // parameter by eps gamma z and differencing the flows must reproduce the
    // integrated linear system up to O(eps^2).
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    double gamma = 1.4711;
    double zval = 0.8;
    wgf::TauField tau;
    tau.pot = &pot;
    tau.theta = theta;
    tau.gamma = Eigen::MatrixXd::Constant(1, 1, gamma);

    const double T = 0.5, dt = 1e-3;
    int steps = int(std::lround(T / dt));
    wgf::GaussianState s0 = state1(1.0, 0.25);
    wgf::BwTrajectory p_half = wgf::bw_ode_integrate(pot, theta, s0, T, dt / 2.0);

    wgf::NoisePath z;
    z.time = wgf::TimeGrid{T, steps};
    z.q = 1;
    z.kind = wgf::NoisePath::Kind::fixed_gaussian;
    z.values.assign(size_t(steps) + 1, Eigen::VectorXd::Constant(1, zval));

    auto limit = wgf::bw_limit_integrate(wgf::BwSystem::ode_fixed_z, pot, theta, tau, p_half,
                                         z, T, dt);

    const double eps = 1e-4;
    Eigen::VectorXd th_p = theta + Eigen::VectorXd::Constant(1, eps * gamma * zval);
    Eigen::VectorXd th_m = theta - Eigen::VectorXd::Constant(1, eps * gamma * zval);
    wgf::BwTrajectory up = wgf::bw_ode_integrate(pot, th_p, s0, T, dt);
    wgf::BwTrajectory dn = wgf::bw_ode_integrate(pot, th_m, s0, T, dt);

    double worst = 0.0;
    for (int i = 0; i <= steps; i += 50) {
        double dmu = (up[size_t(i)].second.mu(0) - dn[size_t(i)].second.mu(0)) / (2.0 * eps);
        double dsig =
            (up[size_t(i)].second.sigma(0, 0) - dn[size_t(i)].second.sigma(0, 0)) /
            (2.0 * eps);
        worst = std::max(worst, std::abs(limit[size_t(i)].second.v_mu(0) - dmu));
        worst = std::max(worst, std::abs(limit[size_t(i)].second.v_sigma(0, 0) - dsig));
    }
    MESSAGE("directional derivative gap ", worst);
    CHECK(worst < 1e-5);
}

TEST_CASE("sde-driven limit system integrates and keeps symmetry") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    wgf::TauField tau;
    tau.pot = &pot;
    tau.theta = theta;
    tau.gamma = Eigen::MatrixXd::Identity(1, 1);

    const double T = 0.4, dt = 0.01;
    int steps = int(std::lround(T / dt));
    wgf::BwTrajectory p_half =
        wgf::bw_ode_integrate(pot, theta, state1(0.5, 0.5), T, dt / 2.0);
    wgf::NoisePath w = wgf::sample_brownian(wgf::TimeGrid{T, steps}, 1, 9, 1);
    auto limit = wgf::bw_limit_integrate(wgf::BwSystem::sde_wt_over_t, pot, theta, tau,
                                         p_half, w, T, dt);
    REQUIRE(int(limit.size()) == steps + 1);
    for (const auto& [t, v] : limit) {
        CHECK(std::isfinite(v.v_mu(0)));
        CHECK(std::isfinite(v.v_sigma(0, 0)));
    }

    // Kind mismatches are rejected.
    wgf::NoisePath z = wgf::fixed_gaussian_noise(wgf::TimeGrid{T, steps}, 1, 9, 1);
    CHECK_THROWS_AS(wgf::bw_limit_integrate(wgf::BwSystem::sde_wt_over_t, pot, theta, tau,
                                            p_half, z, T, dt),
                    wgf::ConfigError);
    CHECK_THROWS_AS(wgf::bw_limit_integrate(wgf::BwSystem::ode_fixed_z, pot, theta, tau,
                                            p_half, w, T, dt),
                    wgf::ConfigError);
    wgf::BwTrajectory short_half(p_half.begin(), p_half.end() - 2);
    CHECK_THROWS_AS(wgf::bw_limit_integrate(wgf::BwSystem::ode_fixed_z, pot, theta, tau,
                                            short_half, z, T, dt),
                    wgf::ConfigError);
}

TEST_CASE("trajectory CSV lists time, mean, and covariance columns") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    wgf::BwTrajectory traj = wgf::bw_ode_integrate(pot, theta, state1(1.0, 1.0), 0.1, 0.05);
    auto dir = testutil::temp_dir("bw_csv");
    wgf::write_bw_csv(dir / "bw.csv", traj);
    std::ifstream in(dir / "bw.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,mu_1,sigma_11");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == int(traj.size()));
}
