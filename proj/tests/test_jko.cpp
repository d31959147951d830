#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "wgf/errors.hpp"
#include "wgf/fokker_planck.hpp"
#include "wgf/jko.hpp"
#include "wgf/langevin.hpp"
#include "wgf/potential.hpp"
#include "test_support.hpp"

using testutil::gaussian_density;

namespace {

wgf::StepPotential quadratic_step() {
    wgf::StepPotential p;
    p.psi = [](double x) { return 0.5 * x * x; };
    p.grad = [](double x) { return x; };
    return p;
}

} // namespace

TEST_CASE("outer steps never increase the free energy and keep densities valid") {
    wgf::Grid1D g{5.0, 200};
    wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
    wgf::JkoOptions opts;
    opts.delta = 0.01;
    wgf::StepPotential pot = quadratic_step();
    wgf::JkoTrajectory traj = wgf::run_plain(rho0, pot, opts, 0.1);
    REQUIRE(traj.steps() == 10);

    double prev = wgf::free_energy(rho0, pot.psi, opts.beta);
    for (int k = 0; k < traj.steps(); ++k) {
        const wgf::JkoStepDiag& d = traj.diags[size_t(k)];
        CHECK(d.free_energy <= prev + 1e-6);

        // The inner solver is a projected descent stopped at a finite
        // tolerance, not an exact minimizer, so the proximal objective may
        // sit above the stay-in-place value by the stopping scale.
        CHECK(0.5 * d.w2_sq + opts.delta * d.free_energy <=
              opts.delta * prev + 10.0 * opts.kappa);
        prev = d.free_energy;

        const wgf::DensityGrid& rho = traj.iterates[size_t(k + 1)];
        CHECK(wgf::mass(rho) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(rho[0] == 0.0);
        CHECK(rho[g.J] == 0.0);
        double min = 0.0;
        for (double v : rho.v) min = std::min(min, v);
        CHECK(min >= 0.0);
    }
}

TEST_CASE("iterates drift toward the gibbs law") {
    wgf::Grid1D g{5.0, 200};
    wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
    wgf::QuadraticPotential qpot(1);
    wgf::DensityGrid pi = wgf::gibbs_density(qpot, Eigen::VectorXd::Zero(1), 1.0, g);
    wgf::JkoOptions opts;
    opts.delta = 0.01;
    wgf::JkoTrajectory traj = wgf::run_plain(rho0, quadratic_step(), opts, 0.5);
    double start = wgf::l1_distance(traj.iterates.front(), pi);
    double end = wgf::l1_distance(traj.iterates.back(), pi);
    MESSAGE("distance to gibbs ", start, " -> ", end);
    CHECK(end < start);
}

TEST_CASE("interpolation rules select the advertised iterate") {
    wgf::Grid1D g{5.0, 100};
    wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
    wgf::JkoOptions opts;
    opts.delta = 0.02;
    wgf::JkoTrajectory traj = wgf::run_plain(rho0, quadratic_step(), opts, 0.1);
    REQUIRE(traj.steps() == 5);

    traj.opts.interp = wgf::JkoOptions::Interp::ceil_index;
    CHECK(&traj.at_time(0.0) == &traj.iterates[0]);
    CHECK(&traj.at_time(0.01) == &traj.iterates[1]);
    CHECK(&traj.at_time(0.02) == &traj.iterates[1]);
    CHECK(&traj.at_time(0.05) == &traj.iterates[3]);
    CHECK(&traj.at_time(9.0) == &traj.iterates[5]);

    traj.opts.interp = wgf::JkoOptions::Interp::floor_index;
    CHECK(&traj.at_time(0.01) == &traj.iterates[0]);
    CHECK(&traj.at_time(0.02) == &traj.iterates[1]);
    CHECK(&traj.at_time(0.05) == &traj.iterates[2]);

    traj.opts.interp = wgf::JkoOptions::Interp::ceil_index;
    wgf::FieldGrid f = traj.to_field(wgf::TimeGrid{0.1, 10});
    for (int j = 0; j <= g.J; ++j) {
        CHECK(f.at(0, j) == traj.iterates[0][j]);
        CHECK(f.at(1, j) == traj.iterates[1][j]); // t = 0.01 rounds up
        CHECK(f.at(10, j) == traj.iterates[5][j]);
    }
}

TEST_CASE("transport cost scales like the square of the outer step") {
    wgf::Grid1D g{5.0, 100};
    wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
    auto total_w2 = [&](double delta) {
        wgf::JkoOptions opts;
        opts.delta = delta;
        wgf::JkoTrajectory traj = wgf::run_plain(rho0, quadratic_step(), opts, 0.2);
        double sum = 0.0;
        for (const auto& d : traj.diags) sum += d.w2_sq;
        return sum;
    };
    double coarse = total_w2(0.02);
    double fine = total_w2(0.01);
    MESSAGE("sum W2^2 ", coarse, " -> ", fine, " ratio ", coarse / fine);
    CHECK(coarse / fine > 1.4);
    CHECK(coarse / fine < 3.0);
}

TEST_CASE("proximal flow approaches the continuous solution under refinement") {
    // Joint refinement of the outer step and the grid: at a fixed grid the
    // spatial error floor eventually dominates the O(delta) step error, so
    // the halving of delta comes with a halving of the cell size. The
    // reference is the exact Gaussian flow at the horizon, sampled on each
    // run's own grid. Grids beyond a few hundred cells leave the inner
    // descent's working regime at the default tolerances, so the check stays
    // at two levels.
    wgf::ScalarMoments m = wgf::ou_exact_moments(0.0, 0.0, 1.44, 0.5);
    std::vector<double> errs;
    for (auto [delta, J] : {std::pair<double, int>{0.05, 100}, {0.025, 200}}) {
        wgf::Grid1D g{5.0, J};
        wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
        wgf::JkoOptions opts;
        opts.delta = delta;
        wgf::JkoTrajectory traj = wgf::run_plain(rho0, quadratic_step(), opts, 0.5);
        errs.push_back(wgf::l1_distance(traj.iterates.back(),
                                        gaussian_density(g, m.mean, m.var)));
    }
    MESSAGE("L1 errors ", errs[0], " -> ", errs[1], " ratio ", errs[0] / errs[1]);
    CHECK(errs[1] < errs[0]);
    CHECK(errs[0] / errs[1] > 1.4);
    CHECK(errs[1] < 2.5e-3);
}

TEST_CASE("inner iteration cap raises the stall flag instead of failing") {
    wgf::Grid1D g{5.0, 100};
    wgf::DensityGrid rho0 = gaussian_density(g, 1.5, 0.25);
    wgf::JkoOptions opts;
    opts.delta = 0.05;
    opts.max_inner = 1;
    auto [rho1, diag] = wgf::jko_step(rho0, quadratic_step(), opts);
    CHECK(diag.stalled);
    CHECK(diag.inner_iters == 0); // only the first inner evaluation ran
    CHECK(diag.alpha_l1 > opts.kappa);
    CHECK(wgf::mass(rho1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero initial band widens on demand") {
    wgf::Grid1D g{5.0, 100};
    wgf::DensityGrid rho0 = gaussian_density(g, 1.0, 0.5);
    wgf::JkoOptions opts;
    opts.delta = 0.05;
    opts.band = 0;
    auto [rho1, diag] = wgf::jko_step(rho0, quadratic_step(), opts);
    CHECK(wgf::mass(rho1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(diag.band_used >= 1);
}

TEST_CASE("online schemes consume the estimate trajectory in order") {
    wgf::Grid1D g{5.0, 100};
    wgf::DensityGrid rho0 = gaussian_density(g, 0.0, 1.44);
    wgf::QuadraticPotential pot(1);
    wgf::JkoOptions opts;
    opts.delta = 0.02;

    wgf::EstimatorTrajectory pb;
    pb.scheme = "per_batch";
    for (double v : {0.3, -0.1, 0.2, 0.05, -0.25})
        pb.estimates.push_back(Eigen::VectorXd::Constant(1, v));

    // Averaging the quadratic potential over parameters equals using the
    // mean parameter, so the averaged run must match a cumulative run on the
    // prefix means.
    wgf::EstimatorTrajectory prefix;
    prefix.scheme = "prefix";
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(1);
    for (int k = 0; k < pb.steps(); ++k) {
        acc += pb.estimates[size_t(k)];
        prefix.estimates.push_back(acc / double(k + 1));
    }

    wgf::JkoTrajectory avg =
        wgf::run_online(rho0, pot, pb, wgf::OnlineScheme::averaged, opts, 0.1);
    wgf::JkoTrajectory cum =
        wgf::run_online(rho0, pot, prefix, wgf::OnlineScheme::cumulative, opts, 0.1);
    REQUIRE(avg.steps() == 5);
    REQUIRE(cum.steps() == 5);
    for (int k = 1; k <= 5; ++k)
        CHECK(wgf::l1_distance(avg.iterates[size_t(k)], cum.iterates[size_t(k)]) < 1e-6);

    // Too few estimates for the requested horizon.
    CHECK_THROWS_AS(wgf::run_online(rho0, pot, pb, wgf::OnlineScheme::cumulative, opts, 0.2),
                    wgf::TrajectoryTooShort);
}
