// Command-line front end: every subcommand loads a JSON config, runs one
// solver pipeline, and writes CSV/JSON artifacts into the output directory.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "wgf/bures.hpp"
#include "wgf/config.hpp"
#include "wgf/errors.hpp"
#include "wgf/experiments.hpp"
#include "wgf/fokker_planck.hpp"
#include "wgf/jko.hpp"
#include "wgf/limit_fields.hpp"
#include "wgf/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliArgs {
    std::string config;
    std::string out;
    uint64_t seed = 0;
    int threads = 0;
};

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw wgf::ConfigError("cannot write " + p.string());
    out << j.dump(2) << "\n";
}

json trajectory_diag_json(const wgf::JkoTrajectory& traj, const wgf::EstimatorTrajectory& est) {
    json steps = json::array();
    for (size_t k = 0; k < traj.diags.size(); ++k) {
        const auto& d = traj.diags[k];
        json row;
        row["step"] = k + 1;
        row["inner_iters"] = d.inner_iters;
        row["alpha_l1"] = d.alpha_l1;
        row["w2_sq"] = d.w2_sq;
        row["free_energy"] = d.free_energy;
        row["stalled"] = d.stalled;
        row["band_used"] = d.band_used;
        if (k < est.estimates.size()) {
            const auto& th = est.estimates[k];
            row["theta_hat"] = std::vector<double>(th.data(), th.data() + th.size());
        }
        steps.push_back(row);
    }
    json j;
    j["scheme"] = est.scheme.empty() ? "plain" : est.scheme;
    j["steps"] = steps;
    return j;
}

wgf::SamplePath sample_single_path(const wgf::RunConfig& cfg, const wgf::ParametricPotential& pot,
                                   int n, uint64_t seed) {
    wgf::InitialLaw law =
        pot.is_quadratic() ? wgf::InitialLaw::stationary() : cfg.initial;
    wgf::BatchSet one = wgf::sample_batches(pot, cfg.potential.theta, cfg.jko.beta,
                                            cfg.sampling.eta, 1, n, cfg.sampling.substeps, law,
                                            seed);
    return one.batches.front();
}

int cmd_jko(const wgf::RunConfig& cfg, const fs::path& out, uint64_t seed) {
    auto pot = wgf::build_potential(cfg.potential);
    wgf::DensityGrid rho0 = wgf::initial_density(cfg, *pot);
    const std::string& scheme = cfg.estimator.scheme;

    wgf::JkoTrajectory traj;
    wgf::EstimatorTrajectory est;
    if (scheme == "plain") {
        traj = wgf::run_plain(rho0, wgf::step_potential(*pot, cfg.potential.theta), cfg.jko,
                              cfg.time.T);
    } else if (scheme == "offline") {
        wgf::BatchSet batches = wgf::sample_config_batches(cfg, *pot, seed);
        Eigen::MatrixXd pooled(cfg.sampling.batches * cfg.sampling.batch_size, 1);
        int row = 0;
        for (const auto& b : batches.batches)
            for (int i = 0; i < b.n(); ++i) pooled(row++, 0) = b.obs(i, 0);
        wgf::ThetaEstimate th = wgf::solve_estimating_equation(*pot, pooled);
        est.scheme = "offline";
        est.estimates.push_back(th.theta);
        traj = wgf::run_offline(rho0, *pot, th.theta, cfg.jko, cfg.time.T);
    } else if (scheme == "sequential") {
        int n = cfg.sampling.batches * cfg.sampling.batch_size;
        wgf::SamplePath path = sample_single_path(cfg, *pot, n, seed);
        est = wgf::sequential(*pot, path);
        traj = wgf::run_online(rho0, *pot, est, wgf::OnlineScheme::sequential, cfg.jko,
                               cfg.time.T);
    } else {
        wgf::BatchSet batches = wgf::sample_config_batches(cfg, *pot, seed);
        wgf::OnlineScheme os = wgf::OnlineScheme::cumulative;
        if (scheme == "cumulative") {
            est = wgf::online_cumulative(*pot, batches);
        } else if (scheme == "per_batch") {
            os = wgf::OnlineScheme::per_batch;
            est = wgf::per_batch(*pot, batches);
        } else { // averaged
            os = wgf::OnlineScheme::averaged;
            est = wgf::per_batch(*pot, batches);
        }
        traj = wgf::run_online(rho0, *pot, est, os, cfg.jko, cfg.time.T);
    }

    wgf::write_field_csv(out / "trajectory.csv", traj.to_field(cfg.time));
    wgf::write_density_csv(out / "rho_final.csv", traj.at_time(cfg.time.T));
    write_json_file(out / "diagnostics.json", trajectory_diag_json(traj, est));
    return 0;
}

int cmd_fp(const wgf::RunConfig& cfg, const fs::path& out, uint64_t /*seed*/) {
    auto pot = wgf::build_potential(cfg.potential);
    wgf::DensityGrid rho0 = wgf::initial_density(cfg, *pot);
    auto drift = wgf::constant_drift(cfg.grid, [&](double x) {
        Eigen::VectorXd xv(1);
        xv << x;
        return -pot->grad_x(cfg.potential.theta, xv)(0);
    });
    wgf::CnOptions opts;
    opts.renormalize_each_step = cfg.fp.renormalize;
    wgf::FieldGrid f = wgf::cn_solve(rho0, drift, cfg.jko.beta, cfg.time, opts);
    wgf::write_field_csv(out / "fp_field.csv", f);
    wgf::write_density_csv(out / "rho_final.csv", f.slice(cfg.time.I));
    return 0;
}

int cmd_spde(const wgf::RunConfig& cfg, const fs::path& out, uint64_t seed) {
    auto pot = wgf::build_potential(cfg.potential);
    if (pot->dim_x() != 1) throw wgf::ConfigError("spde-run requires a scalar potential");
    int q = pot->dim_theta();
    wgf::DensityGrid rho0 = wgf::initial_density(cfg, *pot);

    // Unperturbed flow entering the forcing term.
    wgf::FieldGrid rho_ref;
    const auto* quad = dynamic_cast<const wgf::QuadraticPotential*>(pot.get());
    if (quad && cfg.initial.kind == wgf::InitialLaw::Kind::gaussian) {
        double a = quad->A()(0, 0);
        double mu0 = cfg.initial.mu(0), var0 = cfg.initial.sigma(0, 0);
        rho_ref = wgf::FieldGrid(cfg.grid, cfg.time);
        for (int i = 0; i <= cfg.time.I; ++i) {
            double t = cfg.time.t(i);
            double mean = cfg.potential.theta(0) +
                          (mu0 - cfg.potential.theta(0)) * std::exp(-a * t);
            double var = var0 * std::exp(-2.0 * a * t) +
                         (1.0 - std::exp(-2.0 * a * t)) / (cfg.jko.beta * a);
            for (int j = 0; j <= cfg.grid.J; ++j) {
                double z = cfg.grid.x(j) - mean;
                rho_ref.at(i, j) = std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
            }
        }
    } else {
        auto drift = wgf::constant_drift(cfg.grid, [&](double x) {
            Eigen::VectorXd xv(1);
            xv << x;
            return -pot->grad_x(cfg.potential.theta, xv)(0);
        });
        wgf::CnOptions opts;
        opts.renormalize_each_step = cfg.fp.renormalize;
        rho_ref = wgf::cn_solve(rho0, drift, cfg.jko.beta, cfg.time, opts);
    }

    wgf::ForcingSpec spec;
    spec.rho = wgf::field_density(rho_ref);
    double gamma = std::sqrt(wgf::ou_gamma_sq(cfg.sampling.eta));
    spec.tau = wgf::TauField{pot.get(), cfg.potential.theta,
                             gamma * Eigen::MatrixXd::Identity(q, q)};
    if (cfg.limit.rule == "fixed_z") {
        spec.rule = wgf::ScalingRule::fixed_z;
        spec.noise = wgf::fixed_gaussian_noise(cfg.time, q, seed, wgf::substream("spde", 0));
    } else if (cfg.limit.rule == "wt_over_t") {
        spec.rule = wgf::ScalingRule::wt_over_t;
        spec.noise = wgf::sample_brownian(cfg.time, q, seed, wgf::substream("spde", 0));
    } else if (cfg.limit.rule == "white") {
        spec.rule = wgf::ScalingRule::white;
        spec.noise = wgf::white_noise_path(cfg.time, q, seed, wgf::substream("spde", 0));
    } else { // coupled
        if (std::abs(cfg.time.dt() - cfg.jko.delta) > 1e-12)
            throw wgf::ConfigError("coupled forcing requires time.horizon / time.steps == "
                                   "jko.delta");
        wgf::BatchSet batches = wgf::sample_config_batches(cfg, *pot, seed);
        wgf::EstimatorTrajectory est = wgf::online_cumulative(*pot, batches);
        est.estimates.resize(size_t(cfg.time.I), Eigen::VectorXd::Zero(q));
        spec.tau.gamma = Eigen::MatrixXd::Identity(q, q);
        spec.rule = wgf::ScalingRule::coupled;
        spec.noise = wgf::coupled_forcing_from_estimates(est, cfg.potential.theta,
                                                         cfg.sampling.batch_size,
                                                         cfg.jko.delta, spec.tau);
    }

    wgf::FieldGrid v = wgf::simulate_field(spec, *pot, cfg.potential.theta, cfg.jko.beta,
                                           cfg.grid, cfg.time);
    wgf::write_field_csv(out / "v_field.csv", v);
    return 0;
}

int cmd_bw(const wgf::RunConfig& cfg, const fs::path& out, uint64_t /*seed*/) {
    auto pot = wgf::build_potential(cfg.potential);
    wgf::GaussianState state0{cfg.bw.mean, cfg.bw.covariance};
    state0.validate();
    wgf::BwTrajectory ode = wgf::bw_ode_integrate(*pot, cfg.potential.theta, state0,
                                                  cfg.time.T, cfg.bw.dt, cfg.jko.beta,
                                                  cfg.bw.gh_order);
    wgf::write_bw_csv(out / "bw_ode.csv", ode);
    int steps = std::max(1, int(std::llround(cfg.time.T / cfg.jko.delta)));
    wgf::BwTrajectory disc = wgf::bw_jko_run(*pot, cfg.potential.theta, state0, cfg.jko.delta,
                                             steps, cfg.jko.beta, cfg.bw.gh_order);
    wgf::write_bw_csv(out / "bw_jko.csv", disc);
    return 0;
}

int cmd_estimate(const wgf::RunConfig& cfg, const fs::path& out, uint64_t seed) {
    auto pot = wgf::build_potential(cfg.potential);
    const std::string& scheme = cfg.estimator.scheme;
    if (scheme == "plain") throw wgf::ConfigError("estimate needs an estimating scheme");

    wgf::EstimatorTrajectory est;
    int n_total = cfg.sampling.batches * cfg.sampling.batch_size;
    if (scheme == "offline" || scheme == "sequential") {
        wgf::SamplePath path = sample_single_path(cfg, *pot, n_total, seed);
        wgf::write_path_csv(out / "path.csv", path);
        wgf::write_path_meta(out / "path_meta.json", path);
        if (scheme == "sequential") {
            est = wgf::sequential(*pot, path);
        } else {
            est.scheme = "offline";
            est.estimates.push_back(wgf::solve_offline(*pot, path).theta);
        }
    } else {
        wgf::BatchSet batches = wgf::sample_config_batches(cfg, *pot, seed);
        if (scheme == "cumulative") {
            est = wgf::online_cumulative(*pot, batches);
        } else if (scheme == "per_batch") {
            est = wgf::per_batch(*pot, batches);
        } else { // averaged: running means of the per-batch estimates
            wgf::EstimatorTrajectory pb = wgf::per_batch(*pot, batches);
            est.scheme = "averaged";
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(pb.q());
            for (int k = 0; k < pb.steps(); ++k) {
                acc += pb.estimates[size_t(k)];
                est.estimates.push_back(acc / double(k + 1));
            }
        }
    }

    {
        std::ofstream csv(out / "estimates.csv", std::ios::binary);
        if (!csv) throw wgf::ConfigError("cannot write " + (out / "estimates.csv").string());
        csv << "k";
        for (int c = 0; c < est.q(); ++c) csv << ",theta_" << (c + 1);
        csv << "\n";
        for (int k = 0; k < est.steps(); ++k) {
            csv << k + 1;
            for (int c = 0; c < est.q(); ++c)
                csv << ',' << wgf::format_double(est.estimates[size_t(k)](c));
            csv << "\n";
        }
    }

    // Long-run covariance scale from one contiguous path at the final estimate.
    wgf::SamplePath gpath = sample_single_path(cfg, *pot, n_total,
                                               seed ^ 0x9e3779b97f4a7c15ULL);
    Eigen::MatrixXd gamma = wgf::estimate_gamma(*pot, est.estimates.back(), gpath,
                                                cfg.estimator.lag_cutoff);
    {
        std::ofstream csv(out / "gamma.csv", std::ios::binary);
        for (int r = 0; r < gamma.rows(); ++r) {
            for (int c = 0; c < gamma.cols(); ++c)
                csv << (c ? "," : "") << wgf::format_double(gamma(r, c));
            csv << "\n";
        }
    }

    json j;
    j["scheme"] = est.scheme;
    const auto& th = est.estimates.back();
    j["theta_hat"] = std::vector<double>(th.data(), th.data() + th.size());
    j["observations"] = n_total;
    json grows = json::array();
    for (int r = 0; r < gamma.rows(); ++r)
        grows.push_back(std::vector<double>(gamma.row(r).data(),
                                            gamma.row(r).data() + gamma.cols()));
    j["gamma"] = grows;
    write_json_file(out / "estimate_summary.json", j);
    return 0;
}

int cmd_experiment(const wgf::RunConfig& cfg, const fs::path& out, uint64_t seed) {
    wgf::Manifest m = wgf::run_experiment(cfg, out, seed);
    std::cout << "experiment " << m.experiment << ": " << m.files.size()
              << " artifacts in " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for proximal Wasserstein gradient flows"};
    app.require_subcommand(1);

    CliArgs args;
    const char* names[] = {"jko-run", "fp-run", "spde-run", "bw-run", "estimate", "experiment"};
    const char* blurbs[] = {
        "proximal scheme trajectory",           "Crank-Nicolson drift-diffusion solve",
        "limit fluctuation field simulation",   "Gaussian-restricted flow and proximal steps",
        "drift estimation from sampled paths",  "config-driven experiment with manifest"};
    for (int i = 0; i < 6; ++i) {
        CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", args.config, "JSON configuration file")->required();
        sub->add_option("--out", args.out, "output directory")->required();
        sub->add_option("--seed", args.seed, "base RNG seed");
        sub->add_option("--threads", args.threads, "worker threads (0 = library default)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
#ifdef _OPENMP
        if (args.threads > 0) omp_set_num_threads(args.threads);
#endif
        wgf::RunConfig cfg = wgf::load_config(args.config);
        fs::path out(args.out);
        fs::create_directories(out);
        std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "jko-run") return cmd_jko(cfg, out, args.seed);
        if (sub == "fp-run") return cmd_fp(cfg, out, args.seed);
        if (sub == "spde-run") return cmd_spde(cfg, out, args.seed);
        if (sub == "bw-run") return cmd_bw(cfg, out, args.seed);
        if (sub == "estimate") return cmd_estimate(cfg, out, args.seed);
        return cmd_experiment(cfg, out, args.seed);
    } catch (const wgf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wgf::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
