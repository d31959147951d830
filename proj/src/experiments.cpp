#include "wgf/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wgf/bures.hpp"
#include "wgf/errors.hpp"
#include "wgf/fokker_planck.hpp"
#include "wgf/svg.hpp"

namespace wgf {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_hash(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot hash missing artifact " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return hex64(fnv1a64(buf.str()));
}

// Collects emitted artifacts so the manifest can list them with hashes.
struct ArtifactSink {
    fs::path dir;
    std::vector<ManifestFile> files;

    fs::path at(const std::string& name) const { return dir / name; }
    void add(const std::string& name) { files.push_back({name, file_hash(dir / name)}); }
};

void write_json_file(const fs::path& p, const json& j) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << j.dump(2) << "\n";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double sample_variance(const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= double(y.size());
    double acc = 0.0;
    for (double v : y) acc += (v - mean) * (v - mean);
    return acc / double(y.size() - 1);
}

// Exact Gaussian flow of the scalar quadratic potential: rate a = A(0,0),
// stationary variance 1/(beta a).
FieldGrid analytic_gaussian_flow(double a, double beta, double theta, double mu0, double var0,
                                 const Grid1D& grid, const TimeGrid& time) {
    FieldGrid f(grid, time);
    for (int i = 0; i <= time.I; ++i) {
        double t = time.t(i);
        double mean = theta + (mu0 - theta) * std::exp(-a * t);
        double var = var0 * std::exp(-2.0 * a * t) +
                     (1.0 - std::exp(-2.0 * a * t)) / (beta * a);
        for (int j = 0; j <= grid.J; ++j) {
            double z = grid.x(j) - mean;
            f.at(i, j) = std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * M_PI * var);
        }
    }
    return f;
}

int default_replications(const std::string& id) {
    if (id == "prop53_variance") return 10000;
    if (id == "prop53_sweep") return 300;
    if (id == "clt_offline") return 2000;
    return 1;
}

void write_prop53_csv(const fs::path& p, const std::vector<Prop53Row>& rows) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << "t,delta,n,variance,limit\n";
    for (const auto& r : rows)
        out << format_double(r.t) << ',' << format_double(r.delta) << ',' << format_double(r.n)
            << ',' << format_double(r.variance) << ','
            << format_double(prop53_limit_variance(r.t)) << "\n";
}

} // namespace

BatchSet sample_config_batches(const RunConfig& cfg, const ParametricPotential& pot,
                               uint64_t seed) {
    InitialLaw law = pot.is_quadratic() ? InitialLaw::stationary() : cfg.initial;
    return sample_batches(pot, cfg.potential.theta, cfg.jko.beta, cfg.sampling.eta,
                          cfg.sampling.batches, cfg.sampling.batch_size, cfg.sampling.substeps,
                          law, seed);
}

FieldGrid scaled_difference(const FieldGrid& rho_hat, const FieldGrid& rho_ref, double scale) {
    if (!(rho_hat.grid == rho_ref.grid) || !(rho_hat.time == rho_ref.time))
        throw GridMismatch("scaled_difference: fields live on different grids");
    FieldGrid out(rho_hat.grid, rho_hat.time);
    for (int i = 0; i <= out.time.I; ++i)
        for (int j = 0; j <= out.grid.J; ++j)
            out.at(i, j) = scale * (rho_hat.at(i, j) - rho_ref.at(i, j));
    return out;
}

double prop53_limit_variance(double t) {
    return t / 6.0 + 0.25 * (1.0 - std::exp(-2.0 * t));
}

Prop53Row prop53_variance(double t, double delta, int R, uint64_t seed) {
    if (!(t > 0.0) || !(delta > 0.0)) throw ConfigError("prop53_variance: need t, delta > 0");
    if (R < 2) throw ConfigError("prop53_variance: need R >= 2");
    const int F = 100; // observation spacing refined 100x for the integral
    const long long k = llround(std::ceil(t / delta - 1e-9));
    const long long n_fine = k * F;
    const double dtf = delta / F;
    const double decay = std::exp(-dtf);
    const double sd = std::sqrt(1.0 - decay * decay);
    // Fine cells fully inside [0, t]; the remainder is one partial cell.
    const long long full = std::min<long long>(llround(std::floor(t / dtf + 1e-9)), n_fine);
    const double wpart = std::max(0.0, t - double(full) * dtf);

    std::vector<double> y(size_t(R), 0.0);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < R; ++r) {
        RngStream rng(seed, substream("prop53", uint64_t(r)));
        double x = 0.0, trap = 0.0, obs = 0.0;
        for (long long j = 0; j < n_fine; ++j) {
            double xp = x;
            x = x * decay + sd * rng.normal();
            if (j < full)
                trap += 0.5 * (xp + x) * dtf;
            else if (j == full && wpart > 0.0) {
                double xi = xp + (x - xp) * (wpart / dtf);
                trap += 0.5 * (xp + xi) * wpart;
            }
            if ((j + 1) % F == 0) obs += x;
        }
        y[size_t(r)] = (t / delta) * (obs / double(k) - trap / t);
    }

    Prop53Row row;
    row.t = t;
    row.delta = delta;
    row.n = t / delta;
    row.replications = R;
    row.variance = sample_variance(y);
    return row;
}

std::vector<Prop53Row> run_prop53(double t, const std::vector<double>& n_list, int R,
                                  uint64_t seed) {
    std::vector<Prop53Row> rows;
    rows.reserve(n_list.size());
    for (double n : n_list) {
        if (!(n > 0.0)) throw ConfigError("run_prop53: scales must be positive");
        rows.push_back(prop53_variance(t, t / n, R, seed));
    }
    return rows;
}

std::vector<Prop53Row> prop53_delta_sweep(double t, const std::vector<double>& deltas, int R,
                                          uint64_t seed) {
    std::vector<Prop53Row> rows;
    rows.reserve(deltas.size());
    for (double d : deltas) rows.push_back(prop53_variance(t, d, R, seed));
    return rows;
}

CltResult run_clt_offline(double theta, double eta, int n, int R, uint64_t seed) {
    if (n < 2 || R < 2) throw ConfigError("run_clt_offline: need n, R >= 2");
    QuadraticPotential pot(1);
    Eigen::VectorXd th(1);
    th << theta;
    double gamma = std::sqrt(ou_gamma_sq(eta));

    CltResult res;
    res.z.resize(size_t(R));
#pragma omp parallel for schedule(static)
    for (int r = 0; r < R; ++r) {
        SamplePath path = sample_ou_path(pot, th, 1.0, eta, n, InitialLaw::stationary(), seed,
                                         substream("clt", uint64_t(r)));
        ThetaEstimate est = solve_offline(pot, path);
        res.z[size_t(r)] = std::sqrt(double(n)) * (est.theta(0) - theta) / gamma;
    }

    std::vector<double> sorted = res.z;
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (int i = 0; i < R; ++i) {
        double c = normal_cdf(sorted[size_t(i)]);
        d = std::max(d, std::max(double(i + 1) / R - c, c - double(i) / R));
    }
    res.ks_stat = d;
    res.ks_critical_001 = 1.62762 / std::sqrt(double(R));
    res.pass = res.ks_stat <= res.ks_critical_001;
    return res;
}

FigureRun run_figure_pipeline(const RunConfig& cfg, uint64_t seed) {
    if (std::abs(cfg.time.dt() - cfg.jko.delta) > 1e-12)
        throw ConfigError("figure experiments require time.horizon / time.steps == jko.delta");
    auto pot = build_potential(cfg.potential);
    if (pot->dim_x() != 1) throw ConfigError("figure experiments require a scalar potential");
    const int N = cfg.time.I;
    const std::string& scheme = cfg.estimator.scheme;
    if (scheme == "plain")
        throw ConfigError("figure experiments need an estimating scheme, not \"plain\"");
    if (scheme == "sequential")
        throw ConfigError("figure experiments use batch schemes, not \"sequential\"");
    if (scheme != "offline" && cfg.sampling.batches < N)
        throw ConfigError("sampling.batches must be at least time.steps");

    FigureRun out;
    BatchSet batches = sample_config_batches(cfg, *pot, seed);

    EstimatorTrajectory forcing_traj; // drives the limit-field simulation
    DensityGrid rho0 = initial_density(cfg, *pot);
    if (scheme == "offline") {
        Eigen::MatrixXd pooled(cfg.sampling.batches * cfg.sampling.batch_size, 1);
        int row = 0;
        for (const auto& b : batches.batches)
            for (int i = 0; i < b.n(); ++i) pooled(row++, 0) = b.obs(i, 0);
        ThetaEstimate est = solve_estimating_equation(*pot, pooled);
        out.estimates.scheme = "offline";
        out.estimates.estimates.assign(size_t(N), est.theta);
        forcing_traj = out.estimates;
        out.trajectory = run_offline(rho0, *pot, est.theta, cfg.jko, cfg.time.T);
    } else {
        OnlineScheme os = OnlineScheme::cumulative;
        if (scheme == "cumulative") {
            out.estimates = online_cumulative(*pot, batches);
            forcing_traj = out.estimates;
        } else if (scheme == "per_batch") {
            os = OnlineScheme::per_batch;
            out.estimates = per_batch(*pot, batches);
            forcing_traj = out.estimates;
        } else { // averaged
            os = OnlineScheme::averaged;
            out.estimates = per_batch(*pot, batches);
            forcing_traj.scheme = "averaged";
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(out.estimates.q());
            for (int k = 0; k < out.estimates.steps(); ++k) {
                acc += out.estimates.estimates[size_t(k)];
                forcing_traj.estimates.push_back(acc / double(k + 1));
            }
        }
        out.trajectory = run_online(rho0, *pot, out.estimates, os, cfg.jko, cfg.time.T);
    }
    forcing_traj.estimates.resize(size_t(N), Eigen::VectorXd::Zero(forcing_traj.q()));
    out.rho_hat = out.trajectory.to_field(cfg.time);

    const auto* quad = dynamic_cast<const QuadraticPotential*>(pot.get());
    if (quad && cfg.initial.kind == InitialLaw::Kind::gaussian) {
        out.rho_ref = analytic_gaussian_flow(quad->A()(0, 0), cfg.jko.beta,
                                             cfg.potential.theta(0), cfg.initial.mu(0),
                                             cfg.initial.sigma(0, 0), cfg.grid, cfg.time);
    } else {
        auto drift = constant_drift(cfg.grid, [&](double x) {
            Eigen::VectorXd xv(1);
            xv << x;
            return -pot->grad_x(cfg.potential.theta, xv)(0);
        });
        CnOptions fo;
        fo.renormalize_each_step = cfg.fp.renormalize;
        out.rho_ref = cn_solve(rho0, drift, cfg.jko.beta, cfg.time, fo);
    }

    double scale = std::sqrt(double(cfg.sampling.batch_size) / cfg.jko.delta);
    out.v_hat = scaled_difference(out.rho_hat, out.rho_ref, scale);

    TauField tau{pot.get(), cfg.potential.theta,
                 Eigen::MatrixXd::Identity(pot->dim_theta(), pot->dim_theta())};
    ForcingSpec spec;
    spec.rho = field_density(out.rho_ref);
    spec.tau = tau;
    spec.noise = coupled_forcing_from_estimates(forcing_traj, cfg.potential.theta,
                                                cfg.sampling.batch_size, cfg.jko.delta, tau);
    spec.rule = ScalingRule::coupled;
    out.v1 = simulate_field(spec, *pot, cfg.potential.theta, cfg.jko.beta, cfg.grid, cfg.time);
    return out;
}

double field_correlation(const FieldGrid& a, const FieldGrid& b, double t_lo, double t_hi,
                         double x_max) {
    if (!(a.grid == b.grid) || !(a.time == b.time))
        throw GridMismatch("field_correlation: fields live on different grids");
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    long count = 0;
    for (int i = 0; i <= a.time.I; ++i) {
        double t = a.time.t(i);
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
        for (int j = 0; j <= a.grid.J; ++j) {
            if (std::abs(a.grid.x(j)) > x_max + 1e-12) continue;
            double u = a.at(i, j), v = b.at(i, j);
            sa += u;
            sb += v;
            saa += u * u;
            sbb += v * v;
            sab += u * v;
            ++count;
        }
    }
    if (count < 2) throw ConfigError("field_correlation: window selects fewer than two nodes");
    double n = double(count);
    double cov = sab / n - (sa / n) * (sb / n);
    double va = saa / n - (sa / n) * (sa / n);
    double vb = sbb / n - (sb / n) * (sb / n);
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

void write_manifest(const std::filesystem::path& file, const Manifest& m) {
    json j;
    j["experiment"] = m.experiment;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    j["wall_seconds"] = m.wall_seconds;
    j["files"] = json::array();
    for (const auto& f : m.files) j["files"].push_back({{"name", f.name}, {"hash", f.hash}});
    write_json_file(file, j);
}

namespace {

json diag_json(const FigureRun& fr) {
    json steps = json::array();
    for (size_t k = 0; k < fr.trajectory.diags.size(); ++k) {
        const auto& d = fr.trajectory.diags[k];
        json row;
        row["step"] = k + 1;
        row["inner_iters"] = d.inner_iters;
        row["alpha_l1"] = d.alpha_l1;
        row["w2_sq"] = d.w2_sq;
        row["free_energy"] = d.free_energy;
        row["stalled"] = d.stalled;
        row["band_used"] = d.band_used;
        if (k < fr.estimates.estimates.size()) {
            const auto& th = fr.estimates.estimates[k];
            row["theta_hat"] = std::vector<double>(th.data(), th.data() + th.size());
        }
        steps.push_back(row);
    }
    json j;
    j["scheme"] = fr.estimates.scheme;
    j["steps"] = steps;
    return j;
}

void write_slice_csv(const fs::path& p, const FieldGrid& vh, const FieldGrid& v1, int i) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << "x,v_hat,v1\n";
    for (int j = 0; j <= vh.grid.J; ++j)
        out << format_double(vh.grid.x(j)) << ',' << format_double(vh.at(i, j)) << ','
            << format_double(v1.at(i, j)) << "\n";
}

SvgSeries density_series(const std::string& label, const DensityGrid& rho) {
    SvgSeries s;
    s.label = label;
    for (int j = 0; j <= rho.grid.J; ++j) {
        s.x.push_back(rho.grid.x(j));
        s.y.push_back(rho.v[size_t(j)]);
    }
    return s;
}

SvgSeries slice_series(const std::string& label, const FieldGrid& f, int i) {
    SvgSeries s;
    s.label = label;
    for (int j = 0; j <= f.grid.J; ++j) {
        s.x.push_back(f.grid.x(j));
        s.y.push_back(f.at(i, j));
    }
    return s;
}

void run_figure_experiment(const RunConfig& cfg, uint64_t seed, ArtifactSink& sink) {
    FigureRun fr = run_figure_pipeline(cfg, seed);
    const std::string& id = cfg.experiment.id;
    write_field_csv(sink.at("rho_hat_field.csv"), fr.rho_hat);
    sink.add("rho_hat_field.csv");
    write_field_csv(sink.at("rho_ref_field.csv"), fr.rho_ref);
    sink.add("rho_ref_field.csv");
    write_json_file(sink.at("jko_diagnostics.json"), diag_json(fr));
    sink.add("jko_diagnostics.json");

    if (id == "fig1_density") {
        write_density_csv(sink.at("rho_hat_final.csv"), fr.trajectory.at_time(cfg.time.T));
        sink.add("rho_hat_final.csv");
        DensityGrid ref = fr.rho_ref.slice(cfg.time.I);
        write_density_csv(sink.at("rho_ref_final.csv"), ref);
        sink.add("rho_ref_final.csv");
        if (cfg.experiment.svg) {
            write_line_svg(sink.at("fig1.svg"), "density at the horizon",
                           {density_series("estimated flow", fr.trajectory.at_time(cfg.time.T)),
                            density_series("reference flow", ref)});
            sink.add("fig1.svg");
        }
        return;
    }

    write_field_csv(sink.at("v_hat_field.csv"), fr.v_hat);
    sink.add("v_hat_field.csv");
    write_field_csv(sink.at("v1_field.csv"), fr.v1);
    sink.add("v1_field.csv");

    if (id == "fig2_slice") {
        write_slice_csv(sink.at("slice_mid.csv"), fr.v_hat, fr.v1, cfg.time.I / 2);
        sink.add("slice_mid.csv");
        write_slice_csv(sink.at("slice_final.csv"), fr.v_hat, fr.v1, cfg.time.I);
        sink.add("slice_final.csv");
        if (cfg.experiment.svg) {
            write_line_svg(sink.at("fig2.svg"), "scaled error at the horizon",
                           {slice_series("scaled proximal error", fr.v_hat, cfg.time.I),
                            slice_series("limit field", fr.v1, cfg.time.I)});
            sink.add("fig2.svg");
        }
        return;
    }

    // fig3_contour
    double x_max = std::min(3.0, cfg.grid.D);
    double corr = field_correlation(fr.v_hat, fr.v1, 0.2 * cfg.time.T, cfg.time.T, x_max);
    json j;
    j["correlation"] = corr;
    j["t_lo"] = 0.2 * cfg.time.T;
    j["t_hi"] = cfg.time.T;
    j["x_max"] = x_max;
    write_json_file(sink.at("correlation.json"), j);
    sink.add("correlation.json");
    if (cfg.experiment.svg) {
        write_contour_svg(sink.at("fig3_vhat.svg"), "scaled proximal error", fr.v_hat);
        sink.add("fig3_vhat.svg");
        write_contour_svg(sink.at("fig3_v1.svg"), "limit field", fr.v1);
        sink.add("fig3_v1.svg");
    }
}

void run_clt_experiment(const RunConfig& cfg, uint64_t seed, int R, ArtifactSink& sink) {
    int n = cfg.experiment.n_list.empty() ? 2000 : int(cfg.experiment.n_list.front());
    double theta = cfg.potential.theta(0);
    CltResult res = run_clt_offline(theta, cfg.sampling.eta, n, R, seed);

    {
        std::ofstream out(sink.at("clt_samples.csv"), std::ios::binary);
        out << "replication,z\n";
        for (size_t r = 0; r < res.z.size(); ++r)
            out << r << ',' << format_double(res.z[r]) << "\n";
    }
    sink.add("clt_samples.csv");
    json j;
    j["ks_stat"] = res.ks_stat;
    j["ks_critical_001"] = res.ks_critical_001;
    j["pass"] = res.pass;
    j["replications"] = R;
    j["n"] = n;
    j["eta"] = cfg.sampling.eta;
    write_json_file(sink.at("clt_summary.json"), j);
    sink.add("clt_summary.json");

    if (cfg.experiment.svg) {
        std::vector<double> sorted = res.z;
        std::sort(sorted.begin(), sorted.end());
        SvgSeries emp{"empirical cdf", {}, {}}, ref{"normal cdf", {}, {}};
        for (size_t i = 0; i < sorted.size(); ++i) {
            emp.x.push_back(sorted[i]);
            emp.y.push_back(double(i + 1) / double(sorted.size()));
            ref.x.push_back(sorted[i]);
            ref.y.push_back(normal_cdf(sorted[i]));
        }
        write_line_svg(sink.at("clt.svg"), "standardized estimates", {emp, ref});
        sink.add("clt.svg");
    }
}

void run_oracle_v1_experiment(const RunConfig& cfg, uint64_t seed, ArtifactSink& sink) {
    QuadraticPotential pot(1);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
    double gamma = std::sqrt(ou_gamma_sq(cfg.sampling.eta));
    NoisePath noise = sample_brownian(cfg.time, 1, seed, substream("v1_noise", 0));

    ForcingSpec spec;
    spec.rho = analytic_ou_density(0.0, 0.0, 1.0, cfg.grid, cfg.time);
    spec.tau = TauField{&pot, theta, gamma * Eigen::MatrixXd::Identity(1, 1)};
    spec.noise = noise;
    spec.rule = ScalingRule::wt_over_t;
    FieldGrid v_cn = simulate_field(spec, pot, theta, 1.0, cfg.grid, cfg.time);

    // The reference integrands behave like W(s)/s near s = 0, so the midpoint
    // rule needs subintervals well below the noise step to stop the quadrature
    // error from masking the comparison.
    const int quad = 16 * cfg.time.I;
    FieldGrid closed(cfg.grid, cfg.time), mild(cfg.grid, cfg.time);
    for (int i = 1; i <= cfg.time.I; ++i) {
        double t = cfg.time.t(i);
        for (int j = 0; j <= cfg.grid.J; ++j) {
            closed.at(i, j) = v1_closed_form_ou(gamma, noise, t, cfg.grid.x(j), quad);
            mild.at(i, j) = v1_mild_form_ou(gamma, noise, t, cfg.grid.x(j), quad);
        }
    }

    write_field_csv(sink.at("v1_cn.csv"), v_cn);
    sink.add("v1_cn.csv");
    write_field_csv(sink.at("v1_closed.csv"), closed);
    sink.add("v1_closed.csv");
    write_field_csv(sink.at("v1_mild.csv"), mild);
    sink.add("v1_mild.csv");

    double x_max = std::min(3.0, cfg.grid.D);
    double t_lo = 0.2 * cfg.time.T;
    auto rel_l2 = [&](const FieldGrid& a, const FieldGrid& b) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= cfg.time.I; ++i) {
            if (cfg.time.t(i) < t_lo - 1e-12) continue;
            for (int j = 0; j <= cfg.grid.J; ++j) {
                if (std::abs(cfg.grid.x(j)) > x_max + 1e-12) continue;
                num += (a.at(i, j) - b.at(i, j)) * (a.at(i, j) - b.at(i, j));
                den += b.at(i, j) * b.at(i, j);
            }
        }
        return std::sqrt(num / den);
    };
    json j;
    j["rel_l2_cn_vs_closed"] = rel_l2(v_cn, closed);
    j["rel_l2_cn_vs_mild"] = rel_l2(v_cn, mild);
    j["window"] = {{"t_lo", t_lo}, {"t_hi", cfg.time.T}, {"x_max", x_max}};
    write_json_file(sink.at("oracle_summary.json"), j);
    sink.add("oracle_summary.json");

    if (cfg.experiment.svg) {
        write_line_svg(sink.at("oracle_v1.svg"), "limit field at the horizon",
                       {slice_series("simulated", v_cn, cfg.time.I),
                        slice_series("closed form", closed, cfg.time.I),
                        slice_series("mild form", mild, cfg.time.I)});
        sink.add("oracle_v1.svg");
    }
}

void run_bw_experiment(const RunConfig& cfg, uint64_t seed, ArtifactSink& sink) {
    auto pot = build_potential(cfg.potential);
    GaussianState state0{cfg.bw.mean, cfg.bw.covariance};
    state0.validate();
    const double T = cfg.time.T;
    const double beta = cfg.jko.beta;

    BwTrajectory flow = bw_ode_integrate(*pot, cfg.potential.theta, state0, T, cfg.bw.dt, beta,
                                         cfg.bw.gh_order);
    write_bw_csv(sink.at("bw_ode.csv"), flow);
    sink.add("bw_ode.csv");

    json summary;
    const auto* quad = dynamic_cast<const QuadraticPotential*>(pot.get());
    if (quad && pot->dim_x() == 1 && std::abs(beta - 1.0) < 1e-14 &&
        std::abs(quad->A()(0, 0) - 1.0) < 1e-14) {
        double max_err = 0.0;
        for (const auto& [t, st] : flow) {
            ScalarMoments m = ou_exact_moments(cfg.potential.theta(0), state0.mu(0),
                                               state0.sigma(0, 0), t);
            max_err = std::max(max_err, std::abs(st.mu(0) - m.mean));
            max_err = std::max(max_err, std::abs(st.sigma(0, 0) - m.var));
        }
        summary["ode_max_error_vs_exact"] = max_err;
    }

    // Proximal-step error at the horizon under delta halving.
    std::vector<double> deltas = {0.04, 0.02, 0.01};
    std::vector<double> errs;
    {
        std::ofstream out(sink.at("bw_jko_ratios.csv"), std::ios::binary);
        out << "delta,error,ratio\n";
        for (double d : deltas) {
            int steps = std::max(1, int(llround(T / d)));
            double t_eff = steps * d;
            BwTrajectory disc = bw_jko_run(*pot, cfg.potential.theta, state0, d, steps, beta,
                                           cfg.bw.gh_order);
            BwTrajectory ref = bw_ode_integrate(*pot, cfg.potential.theta, state0, t_eff, 1e-3,
                                                beta, cfg.bw.gh_order);
            const GaussianState& a = disc.back().second;
            const GaussianState& b = ref.back().second;
            double err = (a.mu - b.mu).norm() + (a.sigma - b.sigma).norm();
            errs.push_back(err);
            out << format_double(d) << ',' << format_double(err) << ',';
            if (errs.size() > 1) out << format_double(errs[errs.size() - 2] / err);
            out << "\n";
        }
    }
    sink.add("bw_jko_ratios.csv");

    // Finite-n perturbation against the linear limit system.
    int steps = std::max(1, int(llround(T / cfg.bw.dt)));
    double t_lim = steps * cfg.bw.dt;
    int q = pot->dim_theta();
    TimeGrid lim_time{t_lim, steps};
    NoisePath z_noise = fixed_gaussian_noise(lim_time, q, seed, substream("bw_z", 0));
    TauField tau{pot.get(), cfg.potential.theta, Eigen::MatrixXd::Identity(q, q)};
    BwTrajectory p_half = bw_ode_integrate(*pot, cfg.potential.theta, state0, t_lim,
                                           cfg.bw.dt / 2.0, beta, cfg.bw.gh_order);
    auto limit = bw_limit_integrate(BwSystem::ode_fixed_z, *pot, cfg.potential.theta, tau,
                                    p_half, z_noise, t_lim, cfg.bw.dt, cfg.bw.gh_order);
    double n = 1e6;
    Eigen::VectorXd theta_n = cfg.potential.theta + z_noise.values[0] / std::sqrt(n);
    BwTrajectory base = bw_ode_integrate(*pot, cfg.potential.theta, state0, t_lim, cfg.bw.dt,
                                         beta, cfg.bw.gh_order);
    BwTrajectory pert = bw_ode_integrate(*pot, theta_n, state0, t_lim, cfg.bw.dt, beta,
                                         cfg.bw.gh_order);
    const BwLimitState& vl = limit.back().second;
    Eigen::VectorXd vmu_hat = std::sqrt(n) * (pert.back().second.mu - base.back().second.mu);
    Eigen::MatrixXd vsig_hat =
        std::sqrt(n) * (pert.back().second.sigma - base.back().second.sigma);
    double gap = (vmu_hat - vl.v_mu).lpNorm<Eigen::Infinity>() +
                 (vsig_hat - vl.v_sigma).lpNorm<Eigen::Infinity>();
    summary["perturbation_gap"] = gap;
    summary["perturbation_n"] = n;
    write_json_file(sink.at("bw_summary.json"), summary);
    sink.add("bw_summary.json");

    if (cfg.experiment.svg) {
        SvgSeries mu{"mean", {}, {}}, var{"covariance(0,0)", {}, {}};
        for (const auto& [t, st] : flow) {
            mu.x.push_back(t);
            mu.y.push_back(st.mu(0));
            var.x.push_back(t);
            var.y.push_back(st.sigma(0, 0));
        }
        write_line_svg(sink.at("bw_flow.svg"), "Gaussian flow moments", {mu, var});
        sink.add("bw_flow.svg");
    }
}

} // namespace

Manifest run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    ArtifactSink sink{out_dir, {}};
    const std::string& id = cfg.experiment.id;
    int R = cfg.experiment.replications > 0 ? cfg.experiment.replications
                                            : default_replications(id);

    if (id == "fig1_density" || id == "fig2_slice" || id == "fig3_contour") {
        run_figure_experiment(cfg, seed, sink);
    } else if (id == "prop53_variance") {
        std::vector<double> n_list =
            cfg.experiment.n_list.empty() ? std::vector<double>{1000.0} : cfg.experiment.n_list;
        auto rows = run_prop53(cfg.experiment.t, n_list, R, seed);
        write_prop53_csv(sink.at("prop53.csv"), rows);
        sink.add("prop53.csv");
    } else if (id == "prop53_sweep") {
        std::vector<double> deltas;
        for (int m = 1; m <= 100; ++m) deltas.push_back(1e-4 * m);
        auto rows = prop53_delta_sweep(cfg.experiment.t, deltas, R, seed);
        write_prop53_csv(sink.at("prop53_sweep.csv"), rows);
        sink.add("prop53_sweep.csv");
        if (cfg.experiment.svg) {
            SvgSeries var{"variance", {}, {}}, lim{"limit", {}, {}};
            for (const auto& r : rows) {
                var.x.push_back(r.delta);
                var.y.push_back(r.variance);
                lim.x.push_back(r.delta);
                lim.y.push_back(prop53_limit_variance(r.t));
            }
            write_line_svg(sink.at("prop53_sweep.svg"), "variance across step sizes",
                           {var, lim});
            sink.add("prop53_sweep.svg");
        }
    } else if (id == "clt_offline") {
        run_clt_experiment(cfg, seed, R, sink);
    } else if (id == "oracle_v1") {
        run_oracle_v1_experiment(cfg, seed, sink);
    } else if (id == "bw_convergence") {
        run_bw_experiment(cfg, seed, sink);
    } else {
        throw ConfigError("unknown experiment id \"" + id + "\"");
    }

    Manifest m;
    m.experiment = id;
    m.seed = seed;
    m.config_hash = hex64(fnv1a64(cfg.raw_text));
    std::sort(sink.files.begin(), sink.files.end(),
              [](const ManifestFile& a, const ManifestFile& b) { return a.name < b.name; });
    m.files = std::move(sink.files);
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out_dir / "manifest.json", m);
    return m;
}

} // namespace wgf
