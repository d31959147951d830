#pragma once
// Sampling of overdamped Langevin dynamics dX = -grad psi_theta(X) dt
// + sqrt(2/beta) dB: exact transitions for quadratic potentials and
// Euler-Maruyama for general ones, organized into observation batches.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgf/potential.hpp"
#include "wgf/rng.hpp"

namespace wgf {

// Initial condition descriptor for a path.
struct InitialLaw {
    enum class Kind { point, gaussian, stationary };
    Kind kind = Kind::stationary;
    Eigen::VectorXd mu;    // point value or Gaussian mean
    Eigen::MatrixXd sigma; // Gaussian covariance

    static InitialLaw point(Eigen::VectorXd x0);
    static InitialLaw gaussian(Eigen::VectorXd mu, Eigen::MatrixXd sigma);
    static InitialLaw stationary();
    std::string describe() const;
};

// Observations X(eta), X(2 eta), ..., X(n eta) of one trajectory.
struct SamplePath {
    Eigen::MatrixXd obs; // n x d, row i-1 holds X(i eta)
    double eta = 1.0;
    double beta = 1.0;
    uint64_t seed = 0;
    uint64_t stream = 0;
    std::string initial_law;

    int n() const { return int(obs.rows()); }
    int d() const { return int(obs.cols()); }
};

// m batches of equal length from independent trajectories.
struct BatchSet {
    std::vector<SamplePath> batches;

    int m() const { return int(batches.size()); }
    int length() const { return batches.empty() ? 0 : batches.front().n(); }
};

// Mean and variance of the scalar unit-rate process with beta = 1:
// mu_t = theta + (mu_0 - theta) e^-t, var_t = 1 - (1 - var_0) e^-2t.
struct ScalarMoments {
    double mean = 0.0;
    double var = 0.0;
};
ScalarMoments ou_exact_moments(double theta, double mu0, double var0, double t);

// Exact sampling at spacing eta for quadratic potentials. The transition is
// Gaussian in the eigenbasis of A, so there is no discretization error.
SamplePath sample_ou_path(const QuadraticPotential& pot, const Eigen::VectorXd& theta,
                          double beta, double eta, int n, const InitialLaw& law,
                          uint64_t seed, uint64_t stream);

// Euler-Maruyama sampling with `substeps` internal steps per observation
// spacing; works for any potential.
SamplePath sample_em_path(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          double beta, double eta, int n, int substeps,
                          const InitialLaw& law, uint64_t seed, uint64_t stream);

// m independent batches of n observations each; batch i draws from the
// substream ("batch", base_index + i) so the set is reproducible and
// independent of evaluation order. substeps = 0 selects the exact quadratic
// sampler and is an error for other potentials.
BatchSet sample_batches(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                        double beta, double eta, int m, int n, int substeps,
                        const InitialLaw& law, uint64_t seed, uint64_t base_index = 0);

Eigen::VectorXd draw_initial(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                             double beta, const InitialLaw& law, RngStream& rng);

// Observation CSV (i, t, x_1..x_d) and a JSON sidecar recording the seed,
// stream, spacing, and initial law.
void write_path_csv(const std::filesystem::path& file, const SamplePath& path);
void write_path_meta(const std::filesystem::path& file, const SamplePath& path);

} // namespace wgf
