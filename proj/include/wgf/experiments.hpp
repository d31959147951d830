#pragma once
// Config-driven experiment runner: scaled-difference diagnostics, the
// time-average discretization variance study, CLT calibration, oracle
// comparisons, and the figure pipelines. Every experiment writes CSV/JSON
// artifacts plus a manifest listing each file with a content hash.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wgf/config.hpp"
#include "wgf/limit_fields.hpp"

namespace wgf {

// Observation batches per the sampling section: stationary starts for
// quadratic potentials, the configured initial law otherwise.
BatchSet sample_config_batches(const RunConfig& cfg, const ParametricPotential& pot,
                               uint64_t seed);

// Nodewise scale * (rho_hat - rho_ref) on the common grid.
FieldGrid scaled_difference(const FieldGrid& rho_hat, const FieldGrid& rho_ref, double scale);

// Limiting value t/6 + (1 - e^{-2t})/4 of Var[n(theta_hat_delta - theta_hat)].
double prop53_limit_variance(double t);

struct Prop53Row {
    double t = 1.0;
    double delta = 0.0;
    double n = 0.0; // scale t / delta
    double variance = 0.0;
    int replications = 0;
};

// Monte Carlo variance of n(theta_hat_delta(t) - theta_hat(t)) for the
// stationary unit-rate process started at theta: theta_hat(t) integrates the
// path by trapezoid on a grid refined 100x below delta, theta_hat_delta
// averages the k = ceil(t/delta) observations at spacing delta.
Prop53Row prop53_variance(double t, double delta, int R, uint64_t seed);

// One row per entry of n_list, with delta = t / n.
std::vector<Prop53Row> run_prop53(double t, const std::vector<double>& n_list, int R,
                                  uint64_t seed);

// One row per delta (the non-divisor sweep).
std::vector<Prop53Row> prop53_delta_sweep(double t, const std::vector<double>& deltas, int R,
                                          uint64_t seed);

struct CltResult {
    std::vector<double> z;          // standardized estimates, one per replication
    double ks_stat = 0.0;           // sup distance to the standard normal cdf
    double ks_critical_001 = 0.0;   // asymptotic 1% critical value 1.62762 / sqrt(R)
    bool pass = false;
};

// Offline estimates from R independent stationary unit-rate paths of length
// n at spacing eta, standardized by the closed-form asymptotic scale
// sqrt((1 + e^-eta) / (1 - e^-eta)).
CltResult run_clt_offline(double theta, double eta, int n, int R, uint64_t seed);

// One full online run: batches -> cumulative estimates -> proximal scheme,
// plus the limit-field simulation driven by the same estimate trajectory.
struct FigureRun {
    EstimatorTrajectory estimates;
    JkoTrajectory trajectory;
    FieldGrid rho_hat; // proximal iterates on the outer time grid
    FieldGrid rho_ref; // unperturbed flow on the same grid
    FieldGrid v_hat;   // sqrt(m/delta) (rho_hat - rho_ref)
    FieldGrid v1;      // simulated limit field, estimator-coupled forcing
};

FigureRun run_figure_pipeline(const RunConfig& cfg, uint64_t seed);

// Pearson correlation over nodes with t in [t_lo, t_hi] and |x| <= x_max.
double field_correlation(const FieldGrid& a, const FieldGrid& b, double t_lo, double t_hi,
                         double x_max);

struct ManifestFile {
    std::string name;
    std::string hash; // fnv1a64 of the file bytes, hex
};

struct Manifest {
    std::string experiment;
    uint64_t seed = 0;
    std::string config_hash;
    double wall_seconds = 0.0;
    std::vector<ManifestFile> files;
};

void write_manifest(const std::filesystem::path& file, const Manifest& m);

// Dispatches on cfg.experiment.id, writes artifacts into out_dir, then the
// manifest as manifest.json. Identical config and seed reproduce every CSV
// and SVG byte for byte (the manifest differs only in wall_seconds).
Manifest run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        uint64_t seed);

} // namespace wgf
