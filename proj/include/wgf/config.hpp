#pragma once
// JSON run configuration with per-module sections. Parsing is strict:
// unknown sections or keys, wrong types, and out-of-range values all throw
// ConfigError naming the offending key, before any computation starts.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wgf/jko.hpp"
#include "wgf/langevin.hpp"

namespace wgf {

struct PotentialConfig {
    std::string id = "quadratic"; // quadratic | double_well
    int dim = 1;
    Eigen::VectorXd theta;  // true parameter; defaults to zeros
    Eigen::MatrixXd matrix; // curvature A for quadratic; defaults to identity
};

struct SamplingConfig {
    double eta = 1.0;    // observation spacing along each trajectory
    int batch_size = 10; // observations per batch
    int batches = 50;    // number of batches
    int substeps = 0;    // Euler-Maruyama substeps; 0 = exact quadratic sampler
};

struct EstimatorConfig {
    std::string scheme = "cumulative"; // plain | offline | cumulative |
                                       // per_batch | averaged | sequential
    int lag_cutoff = -1;               // Bartlett window; -1 = floor(n^(1/3))
};

struct FpConfig {
    bool renormalize = true;
};

struct LimitConfig {
    std::string rule = "wt_over_t"; // fixed_z | wt_over_t | white | coupled
    int quad_points = 0;            // closed-form quadrature override
};

struct BwConfig {
    Eigen::VectorXd mean;       // initial Gaussian mean; defaults to zeros
    Eigen::MatrixXd covariance; // initial covariance; defaults to identity
    double dt = 0.01;           // ODE integrator step
    std::string system = "ode_fixed_z"; // ode_fixed_z | sde_wt_over_t
    int gh_order = 20;
};

struct ExperimentSection {
    std::string id = "fig1_density";
    int replications = 0; // 0 selects the per-experiment default
    std::vector<double> n_list; // prop53 scale values / clt path length
    double t = 1.0;             // prop53 evaluation time
    bool svg = true;
};

struct RunConfig {
    PotentialConfig potential;
    Grid1D grid;        // {half_width, cells}
    TimeGrid time;      // {horizon, steps}
    InitialLaw initial; // defaults to gaussian(0, 1.44)
    SamplingConfig sampling;
    JkoOptions jko;
    EstimatorConfig estimator;
    FpConfig fp;
    LimitConfig limit;
    BwConfig bw;
    ExperimentSection experiment;
    std::string raw_text; // exact file contents, kept for hashing
};

// Parses and validates a full configuration document.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& file);

// Instantiates the configured potential (validates dimensions).
std::unique_ptr<ParametricPotential> build_potential(const PotentialConfig& pc);

// Initial density on the grid: the Gaussian or Gibbs law sampled at nodes
// and renormalized. Point initial laws are rejected (no density).
DensityGrid initial_density(const RunConfig& cfg, const ParametricPotential& pot);

} // namespace wgf
