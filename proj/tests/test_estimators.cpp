#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "wgf/errors.hpp"
#include "wgf/estimators.hpp"
#include "wgf/langevin.hpp"
#include "wgf/potential.hpp"
#include "wgf/rng.hpp"

namespace {

wgf::SamplePath stationary_path(int n, double eta, uint64_t seed, uint64_t stream) {
    wgf::QuadraticPotential pot(1);
    return wgf::sample_ou_path(pot, Eigen::VectorXd::Zero(1), 1.0, eta, n,
                               wgf::InitialLaw::stationary(), seed, stream);
}

Eigen::MatrixXd pooled(const wgf::BatchSet& set, int k) {
    int n = set.length(), d = set.batches.front().d();
    Eigen::MatrixXd all(k * n, d);
    for (int b = 0; b < k; ++b) all.middleRows(b * n, n) = set.batches[size_t(b)].obs;
    return all;
}

} // namespace

TEST_CASE("quadratic estimating equation solves to the sample mean in one step") {
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 0.3, 0.3, 1.0;
    wgf::QuadraticPotential pot(a);
    wgf::RngStream rng(7, 0);
    Eigen::MatrixXd obs(40, 2);
    for (int i = 0; i < obs.rows(); ++i)
        for (int j = 0; j < 2; ++j) obs(i, j) = rng.normal() + 0.5 * j;

    wgf::ThetaEstimate est = wgf::solve_estimating_equation(pot, obs);
    Eigen::VectorXd mean = obs.colwise().mean().transpose();
    CHECK((est.theta - mean).norm() < 1e-12);
    CHECK(est.newton_iters <= 2);
    CHECK(est.n_used == 40);
    CHECK(est.residual_norm < 1e-9);
}

TEST_CASE("double well estimate matches its algebraic closed form") {
    // The equation sum (x^3 - theta x) = 0 is linear in theta, so the root is
    // sum x^3 / sum x whenever sum x is nonzero.
    wgf::DoubleWellPotential pot;
    wgf::RngStream rng(8, 0);
    Eigen::MatrixXd obs(60, 1);
    for (int i = 0; i < obs.rows(); ++i) obs(i, 0) = 1.5 + 0.1 * rng.normal();

    double sx = obs.col(0).sum();
    double sx3 = obs.col(0).array().cube().sum();
    wgf::ThetaEstimate est =
        wgf::solve_estimating_equation(pot, obs, Eigen::VectorXd::Constant(1, 2.0));
    CHECK(est.theta(0) == doctest::Approx(sx3 / sx).epsilon(1e-10));

    // Data with sum x = 0 makes the Jacobian vanish; sum x^3 != 0 keeps the
    // residual nonzero, so the solver cannot return early and must report
    // the singularity. (Symmetric +-a data would solve the equation at any
    // theta outright.)
    Eigen::MatrixXd bal(3, 1);
    bal << -2.0, 1.0, 1.0;
    CHECK_THROWS_AS(
        wgf::solve_estimating_equation(pot, bal, Eigen::VectorXd::Zero(1)),
        wgf::SingularJacobian);
}

TEST_CASE("estimating equation rejects unusable inputs") {
    wgf::QuadraticPotential pot(2);
    Eigen::MatrixXd none(0, 2);
    CHECK_THROWS_AS(wgf::solve_estimating_equation(pot, none), wgf::ConfigError);
    Eigen::MatrixXd wrong(5, 3);
    wrong.setZero();
    CHECK_THROWS_AS(wgf::solve_estimating_equation(pot, wrong), wgf::ConfigError);
}

TEST_CASE("cumulative online estimates equal pooled offline solves") {
    wgf::QuadraticPotential pot(1);
    Eigen::VectorXd th(1);
    th << 0.4;
    wgf::BatchSet set = wgf::sample_batches(pot, th, 1.0, 1.0, 12, 10, 0,
                                            wgf::InitialLaw::stationary(), 21);
    wgf::EstimatorTrajectory traj = wgf::online_cumulative(pot, set);
    REQUIRE(traj.steps() == 12);
    CHECK(traj.scheme == "online_cumulative");
    for (int k = 1; k <= 12; ++k) {
        wgf::ThetaEstimate direct = wgf::solve_estimating_equation(pot, pooled(set, k));
        CHECK((traj.estimates[size_t(k - 1)] - direct.theta).norm() < 1e-12);
    }
}

TEST_CASE("per-batch estimates are the batchwise solves") {
    wgf::QuadraticPotential pot(1);
    wgf::BatchSet set = wgf::sample_batches(pot, Eigen::VectorXd::Zero(1), 1.0, 1.0, 6, 15,
                                            0, wgf::InitialLaw::stationary(), 22);
    wgf::EstimatorTrajectory traj = wgf::per_batch(pot, set);
    REQUIRE(traj.steps() == 6);
    for (int k = 0; k < 6; ++k) {
        double mean = set.batches[size_t(k)].obs.col(0).mean();
        CHECK(traj.estimates[size_t(k)](0) == doctest::Approx(mean).epsilon(1e-12));
    }
}

TEST_CASE("sequential estimates are the running prefix means") {
    wgf::SamplePath path = stationary_path(200, 1.0, 23, 0);
    wgf::QuadraticPotential pot(1);
    wgf::EstimatorTrajectory traj = wgf::sequential(pot, path);
    REQUIRE(traj.steps() == 200);
    double acc = 0.0;
    for (int k = 0; k < 200; ++k) {
        acc += path.obs(k, 0);
        CHECK(traj.estimates[size_t(k)](0) == doctest::Approx(acc / (k + 1)).epsilon(1e-12));
    }
}

TEST_CASE("averaged potential means the per-batch parameters") {
    wgf::QuadraticPotential pot(1);
    wgf::BatchSet set = wgf::sample_batches(pot, Eigen::VectorXd::Zero(1), 1.0, 1.0, 5, 12,
                                            0, wgf::InitialLaw::stationary(), 24);
    wgf::EstimatorTrajectory traj = wgf::per_batch(pot, set);
    wgf::AveragedPotential avg = wgf::averaged_psi(pot, traj, 3);
    REQUIRE(avg.thetas.size() == 3);
    for (double x : {-1.0, 0.2, 2.5}) {
        double want = 0.0, want_grad = 0.0;
        for (int j = 0; j < 3; ++j) {
            want += pot.psi1(traj.estimates[size_t(j)](0), x);
            want_grad += pot.grad_x1(traj.estimates[size_t(j)](0), x);
        }
        CHECK(avg.psi1(x) == doctest::Approx(want / 3.0).epsilon(1e-12));
        CHECK(avg.grad_x1(x) == doctest::Approx(want_grad / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("long-run covariance root is symmetric PSD and near the closed form") {
    wgf::QuadraticPotential pot(1);
    wgf::SamplePath path = stationary_path(100000, 1.0, 25, 0);
    wgf::ThetaEstimate est = wgf::solve_offline(pot, path);
    Eigen::MatrixXd gamma = wgf::estimate_gamma(pot, est.theta, path);
    REQUIRE(gamma.rows() == 1);
    double want = std::sqrt(wgf::ou_gamma_sq(1.0));
    MESSAGE("gamma_hat ", gamma(0, 0), " vs closed form ", want);
    CHECK(gamma(0, 0) > 0.0);
    CHECK(gamma(0, 0) == doctest::Approx(want).epsilon(0.10));
}

TEST_CASE("long-run covariance stays symmetric PSD in two dimensions") {
    Eigen::MatrixXd a(2, 2);
    a << 1.5, 0.2, 0.2, 0.8;
    wgf::QuadraticPotential pot(a);
    Eigen::VectorXd th = Eigen::VectorXd::Zero(2);
    wgf::SamplePath path = wgf::sample_ou_path(pot, th, 1.0, 1.0, 20000,
                                               wgf::InitialLaw::stationary(), 26, 0);
    wgf::ThetaEstimate est = wgf::solve_offline(pot, path);
    Eigen::MatrixXd gamma = wgf::estimate_gamma(pot, est.theta, path);
    CHECK((gamma - gamma.transpose()).norm() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("lag cutoff controls the Bartlett window") {
    wgf::QuadraticPotential pot(1);
    wgf::SamplePath path = stationary_path(20000, 1.0, 27, 0);
    wgf::ThetaEstimate est = wgf::solve_offline(pot, path);
    // Cutoff 0 keeps only the lag-0 term, which underestimates the
    // positively correlated series.
    Eigen::MatrixXd g1 = wgf::estimate_gamma(pot, est.theta, path, 0);
    Eigen::MatrixXd gd = wgf::estimate_gamma(pot, est.theta, path);
    CHECK(g1(0, 0) < gd(0, 0));
    CHECK(g1(0, 0) == doctest::Approx(1.0).epsilon(0.1));
}
