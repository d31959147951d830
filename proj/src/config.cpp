#include "wgf/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wgf/errors.hpp"

namespace wgf {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("section \"" + section + "\" must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key \"" + section + "." + it.key() + "\"");
}

std::string path_of(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

double get_number(const json& j, const std::string& section, const std::string& key,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("key \"" + path_of(section, key) + "\" must be a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& section, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError("key \"" + path_of(section, key) + "\" must be an integer");
    return v.get<int>();
}

bool get_bool(const json& j, const std::string& section, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw ConfigError("key \"" + path_of(section, key) + "\" must be a boolean");
    return v.get<bool>();
}

std::string get_string(const json& j, const std::string& section, const std::string& key,
                       const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string())
        throw ConfigError("key \"" + path_of(section, key) + "\" must be a string");
    return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& j, const std::string& section, const std::string& key,
                           const Eigen::VectorXd& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number()) {
        Eigen::VectorXd out(1);
        out(0) = v.get<double>();
        return out;
    }
    if (!v.is_array())
        throw ConfigError("key \"" + path_of(section, key) + "\" must be a number array");
    Eigen::VectorXd out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError("key \"" + path_of(section, key) + "\" must be a number array");
        out(long(i)) = v[i].get<double>();
    }
    return out;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& section, const std::string& key,
                           const Eigen::MatrixXd& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number()) {
        Eigen::MatrixXd out(1, 1);
        out(0, 0) = v.get<double>();
        return out;
    }
    if (!v.is_array() || v.empty())
        throw ConfigError("key \"" + path_of(section, key) + "\" must be an array of rows");
    Eigen::MatrixXd out(v.size(), v[0].size());
    for (size_t r = 0; r < v.size(); ++r) {
        if (!v[r].is_array() || v[r].size() != v[0].size())
            throw ConfigError("key \"" + path_of(section, key) + "\" must have equal-length rows");
        for (size_t c = 0; c < v[r].size(); ++c) {
            if (!v[r][c].is_number())
                throw ConfigError("key \"" + path_of(section, key) + "\" must be numeric");
            out(long(r), long(c)) = v[r][c].get<double>();
        }
    }
    return out;
}

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0)) throw ConfigError("key \"" + name + "\" must be positive");
}

void require_at_least(int v, int lo, const std::string& name) {
    if (v < lo)
        throw ConfigError("key \"" + name + "\" must be at least " + std::to_string(lo));
}

void require_choice(const std::string& v, const std::set<std::string>& allowed,
                    const std::string& name) {
    if (!allowed.count(v)) {
        std::string options;
        for (const auto& a : allowed) options += (options.empty() ? "" : " | ") + a;
        throw ConfigError("key \"" + name + "\" must be one of " + options + ", got \"" + v +
                          "\"");
    }
}

PotentialConfig parse_potential(const json& j) {
    check_keys(j, "potential", {"id", "dim", "theta", "matrix"});
    PotentialConfig pc;
    pc.id = get_string(j, "potential", "id", pc.id);
    require_choice(pc.id, {"quadratic", "double_well"}, "potential.id");
    pc.dim = get_int(j, "potential", "dim", pc.dim);
    require_at_least(pc.dim, 1, "potential.dim");
    if (pc.id == "double_well" && pc.dim != 1)
        throw ConfigError("key \"potential.dim\" must be 1 for the double well");
    pc.theta = get_vector(j, "potential", "theta", Eigen::VectorXd::Zero(pc.dim));
    int q = pc.id == "double_well" ? 1 : pc.dim;
    if (int(pc.theta.size()) != q)
        throw ConfigError("key \"potential.theta\" must have " + std::to_string(q) +
                          " entries");
    pc.matrix = get_matrix(j, "potential", "matrix",
                           Eigen::MatrixXd::Identity(pc.dim, pc.dim));
    if (pc.id == "double_well" && j.contains("matrix"))
        throw ConfigError("key \"potential.matrix\" is not used by the double well");
    if (pc.matrix.rows() != pc.dim || pc.matrix.cols() != pc.dim)
        throw ConfigError("key \"potential.matrix\" must be " + std::to_string(pc.dim) + "x" +
                          std::to_string(pc.dim));
    return pc;
}

Grid1D parse_grid(const json& j) {
    check_keys(j, "grid", {"half_width", "cells"});
    Grid1D g;
    g.D = get_number(j, "grid", "half_width", g.D);
    require_positive(g.D, "grid.half_width");
    g.J = get_int(j, "grid", "cells", g.J);
    require_at_least(g.J, 4, "grid.cells");
    return g;
}

TimeGrid parse_time(const json& j) {
    check_keys(j, "time", {"horizon", "steps"});
    TimeGrid t;
    t.T = get_number(j, "time", "horizon", t.T);
    require_positive(t.T, "time.horizon");
    t.I = get_int(j, "time", "steps", t.I);
    require_at_least(t.I, 1, "time.steps");
    return t;
}

InitialLaw parse_initial(const json& j, const PotentialConfig& pc) {
    check_keys(j, "initial", {"kind", "mean", "variance"});
    std::string kind = get_string(j, "initial", "kind", "gaussian");
    require_choice(kind, {"point", "gaussian", "stationary"}, "initial.kind");
    if (kind == "stationary") {
        if (j.contains("mean") || j.contains("variance"))
            throw ConfigError("keys \"initial.mean\"/\"initial.variance\" are not used by the "
                              "stationary law");
        return InitialLaw::stationary();
    }
    Eigen::VectorXd mean = get_vector(j, "initial", "mean", Eigen::VectorXd::Zero(pc.dim));
    if (int(mean.size()) != pc.dim)
        throw ConfigError("key \"initial.mean\" must have " + std::to_string(pc.dim) +
                          " entries");
    if (kind == "point") {
        if (j.contains("variance"))
            throw ConfigError("key \"initial.variance\" is not used by a point mass");
        return InitialLaw::point(mean);
    }
    Eigen::MatrixXd var = get_matrix(j, "initial", "variance",
                                     1.44 * Eigen::MatrixXd::Identity(pc.dim, pc.dim));
    if (var.rows() != pc.dim || var.cols() != pc.dim)
        throw ConfigError("key \"initial.variance\" must be " + std::to_string(pc.dim) + "x" +
                          std::to_string(pc.dim));
    return InitialLaw::gaussian(mean, var);
}

SamplingConfig parse_sampling(const json& j) {
    check_keys(j, "sampling", {"eta", "batch_size", "batches", "substeps"});
    SamplingConfig s;
    s.eta = get_number(j, "sampling", "eta", s.eta);
    require_positive(s.eta, "sampling.eta");
    s.batch_size = get_int(j, "sampling", "batch_size", s.batch_size);
    require_at_least(s.batch_size, 1, "sampling.batch_size");
    s.batches = get_int(j, "sampling", "batches", s.batches);
    require_at_least(s.batches, 1, "sampling.batches");
    s.substeps = get_int(j, "sampling", "substeps", s.substeps);
    require_at_least(s.substeps, 0, "sampling.substeps");
    return s;
}

JkoOptions parse_jko(const json& j, const Grid1D& grid) {
    check_keys(j, "jko",
               {"delta", "beta", "kappa", "max_inner", "tau0", "schedule", "nesterov", "band",
                "interpolation"});
    JkoOptions o;
    o.delta = get_number(j, "jko", "delta", o.delta);
    require_positive(o.delta, "jko.delta");
    o.beta = get_number(j, "jko", "beta", o.beta);
    require_positive(o.beta, "jko.beta");
    o.kappa = get_number(j, "jko", "kappa", o.kappa);
    require_positive(o.kappa, "jko.kappa");
    o.max_inner = get_int(j, "jko", "max_inner", o.max_inner);
    require_at_least(o.max_inner, 1, "jko.max_inner");
    o.tau0 = get_number(j, "jko", "tau0", o.tau0);
    require_positive(o.tau0, "jko.tau0");
    std::string sched = get_string(j, "jko", "schedule", "inv_log");
    require_choice(sched, {"inv_log", "inv_linear"}, "jko.schedule");
    o.schedule = sched == "inv_log" ? JkoOptions::Schedule::inv_log
                                    : JkoOptions::Schedule::inv_linear;
    o.nesterov = get_bool(j, "jko", "nesterov", o.nesterov);
    o.band = get_int(j, "jko", "band", o.band);
    if (o.band < 0 || o.band > grid.J)
        throw ConfigError("key \"jko.band\" must lie in [0, grid.cells]");
    std::string interp = get_string(j, "jko", "interpolation", "ceil");
    require_choice(interp, {"ceil", "floor"}, "jko.interpolation");
    o.interp = interp == "ceil" ? JkoOptions::Interp::ceil_index
                                : JkoOptions::Interp::floor_index;
    return o;
}

EstimatorConfig parse_estimator(const json& j) {
    check_keys(j, "estimator", {"scheme", "lag_cutoff"});
    EstimatorConfig e;
    e.scheme = get_string(j, "estimator", "scheme", e.scheme);
    require_choice(e.scheme,
                   {"plain", "offline", "cumulative", "per_batch", "averaged", "sequential"},
                   "estimator.scheme");
    e.lag_cutoff = get_int(j, "estimator", "lag_cutoff", e.lag_cutoff);
    return e;
}

FpConfig parse_fp(const json& j) {
    check_keys(j, "fp", {"renormalize"});
    FpConfig f;
    f.renormalize = get_bool(j, "fp", "renormalize", f.renormalize);
    return f;
}

LimitConfig parse_limit(const json& j) {
    check_keys(j, "limit", {"rule", "quad_points"});
    LimitConfig l;
    l.rule = get_string(j, "limit", "rule", l.rule);
    require_choice(l.rule, {"fixed_z", "wt_over_t", "white", "coupled"}, "limit.rule");
    l.quad_points = get_int(j, "limit", "quad_points", l.quad_points);
    require_at_least(l.quad_points, 0, "limit.quad_points");
    return l;
}

BwConfig parse_bw(const json& j, const PotentialConfig& pc) {
    check_keys(j, "bw", {"mean", "covariance", "dt", "system", "gh_order"});
    BwConfig b;
    b.mean = get_vector(j, "bw", "mean", Eigen::VectorXd::Zero(pc.dim));
    if (int(b.mean.size()) != pc.dim)
        throw ConfigError("key \"bw.mean\" must have " + std::to_string(pc.dim) + " entries");
    b.covariance = get_matrix(j, "bw", "covariance",
                              Eigen::MatrixXd::Identity(pc.dim, pc.dim));
    if (b.covariance.rows() != pc.dim || b.covariance.cols() != pc.dim)
        throw ConfigError("key \"bw.covariance\" must be " + std::to_string(pc.dim) + "x" +
                          std::to_string(pc.dim));
    b.dt = get_number(j, "bw", "dt", b.dt);
    require_positive(b.dt, "bw.dt");
    b.system = get_string(j, "bw", "system", b.system);
    require_choice(b.system, {"ode_fixed_z", "sde_wt_over_t"}, "bw.system");
    b.gh_order = get_int(j, "bw", "gh_order", b.gh_order);
    if (b.gh_order < 2 || b.gh_order > 64)
        throw ConfigError("key \"bw.gh_order\" must lie in [2, 64]");
    return b;
}

ExperimentSection parse_experiment(const json& j) {
    check_keys(j, "experiment", {"id", "replications", "n_list", "t", "svg"});
    ExperimentSection e;
    e.id = get_string(j, "experiment", "id", e.id);
    require_choice(e.id,
                   {"fig1_density", "fig2_slice", "fig3_contour", "prop53_variance",
                    "prop53_sweep", "clt_offline", "oracle_v1", "bw_convergence"},
                   "experiment.id");
    e.replications = get_int(j, "experiment", "replications", e.replications);
    require_at_least(e.replications, 0, "experiment.replications");
    Eigen::VectorXd n = get_vector(j, "experiment", "n_list", Eigen::VectorXd());
    e.n_list.assign(n.data(), n.data() + n.size());
    for (double v : e.n_list) require_positive(v, "experiment.n_list");
    e.t = get_number(j, "experiment", "t", e.t);
    require_positive(e.t, "experiment.t");
    e.svg = get_bool(j, "experiment", "svg", e.svg);
    return e;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "",
               {"potential", "grid", "time", "initial", "sampling", "jko", "estimator", "fp",
                "limit", "bw", "experiment"});
    const json empty = json::object();
    auto section = [&](const char* name) -> const json& {
        return root.contains(name) ? root.at(name) : empty;
    };
    RunConfig cfg;
    cfg.potential = parse_potential(section("potential"));
    cfg.grid = parse_grid(section("grid"));
    cfg.time = parse_time(section("time"));
    cfg.initial = parse_initial(section("initial"), cfg.potential);
    cfg.sampling = parse_sampling(section("sampling"));
    cfg.jko = parse_jko(section("jko"), cfg.grid);
    cfg.estimator = parse_estimator(section("estimator"));
    cfg.fp = parse_fp(section("fp"));
    cfg.limit = parse_limit(section("limit"));
    cfg.bw = parse_bw(section("bw"), cfg.potential);
    cfg.experiment = parse_experiment(section("experiment"));
    cfg.raw_text = json_text;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::unique_ptr<ParametricPotential> build_potential(const PotentialConfig& pc) {
    if (pc.id == "quadratic")
        return std::make_unique<QuadraticPotential>(pc.matrix);
    return std::make_unique<DoubleWellPotential>();
}

DensityGrid initial_density(const RunConfig& cfg, const ParametricPotential& pot) {
    if (cfg.potential.dim != 1)
        throw ConfigError("grid densities require a one-dimensional potential");
    DensityGrid rho(cfg.grid);
    switch (cfg.initial.kind) {
    case InitialLaw::Kind::point:
        throw ConfigError("initial.kind \"point\" has no density on the grid");
    case InitialLaw::Kind::gaussian: {
        double mu = cfg.initial.mu(0);
        double var = cfg.initial.sigma(0, 0);
        require_positive(var, "initial.variance");
        for (int j = 0; j <= cfg.grid.J; ++j) {
            double z = cfg.grid.x(j) - mu;
            rho[j] = std::exp(-0.5 * z * z / var);
        }
        break;
    }
    case InitialLaw::Kind::stationary:
        return gibbs_density(pot, cfg.potential.theta, cfg.jko.beta, cfg.grid);
    }
    renormalize_in_place(rho);
    return rho;
}

} // namespace wgf
