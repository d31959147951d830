#include "wgf/langevin.hpp"

#include <cmath>
#include <exception>
#include <fstream>

#include <json.hpp>

#include "wgf/errors.hpp"
#include "wgf/grid.hpp"

namespace wgf {

InitialLaw InitialLaw::point(Eigen::VectorXd x0) {
    InitialLaw law;
    law.kind = Kind::point;
    law.mu = std::move(x0);
    return law;
}

InitialLaw InitialLaw::gaussian(Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
    InitialLaw law;
    law.kind = Kind::gaussian;
    law.mu = std::move(mu);
    law.sigma = std::move(sigma);
    return law;
}

InitialLaw InitialLaw::stationary() {
    InitialLaw law;
    law.kind = Kind::stationary;
    return law;
}

std::string InitialLaw::describe() const {
    switch (kind) {
        case Kind::point: return "point";
        case Kind::gaussian: return "gaussian";
        case Kind::stationary: return "stationary";
    }
    return "?";
}

ScalarMoments ou_exact_moments(double theta, double mu0, double var0, double t) {
    ScalarMoments m;
    double e = std::exp(-t);
    m.mean = theta + (mu0 - theta) * e;
    m.var = 1.0 - (1.0 - var0) * e * e;
    return m;
}

Eigen::VectorXd draw_initial(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                             double beta, const InitialLaw& law, RngStream& rng) {
    int d = pot.dim_x();
    switch (law.kind) {
        case InitialLaw::Kind::point:
            if (law.mu.size() != d) throw ConfigError("initial point has wrong dimension");
            return law.mu;
        case InitialLaw::Kind::gaussian: {
            if (law.mu.size() != d) throw ConfigError("initial mean has wrong dimension");
            Eigen::MatrixXd root = psd_sqrt(law.sigma);
            Eigen::VectorXd z(d);
            for (int i = 0; i < d; ++i) z(i) = rng.normal();
            return law.mu + root * z;
        }
        case InitialLaw::Kind::stationary: {
            // Gibbs law; closed form for quadratics, otherwise unsupported.
            const auto* quad = dynamic_cast<const QuadraticPotential*>(&pot);
            if (!quad)
                throw ConfigError("stationary initial law requires a quadratic potential");
            Eigen::MatrixXd cov = quad->A().inverse() / beta;
            Eigen::MatrixXd root = psd_sqrt(cov);
            Eigen::VectorXd z(d);
            for (int i = 0; i < d; ++i) z(i) = rng.normal();
            return theta + root * z;
        }
    }
    throw ConfigError("unknown initial law");
}

SamplePath sample_ou_path(const QuadraticPotential& pot, const Eigen::VectorXd& theta,
                          double beta, double eta, int n, const InitialLaw& law,
                          uint64_t seed, uint64_t stream) {
    if (eta <= 0.0 || n < 1) throw ConfigError("sample_ou_path: need eta > 0 and n >= 1");
    if (beta <= 0.0) throw ConfigError("sample_ou_path: beta must be positive");
    int d = pot.dim_x();
    if (theta.size() != d) throw ConfigError("sample_ou_path: theta has wrong dimension");

    RngStream rng(seed, stream);
    // Work in the eigenbasis of A, where components decouple.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pot.A());
    Eigen::VectorXd lam = es.eigenvalues();
    Eigen::MatrixXd Q = es.eigenvectors();
    Eigen::VectorXd decay(d), noise_sd(d);
    for (int i = 0; i < d; ++i) {
        decay(i) = std::exp(-lam(i) * eta);
        double var = (1.0 - decay(i) * decay(i)) / (beta * lam(i));
        noise_sd(i) = std::sqrt(std::max(var, 0.0));
    }

    Eigen::VectorXd x = draw_initial(pot, theta, beta, law, rng);
    Eigen::VectorXd y = Q.transpose() * (x - theta);
    SamplePath path;
    path.obs.resize(n, d);
    path.eta = eta;
    path.beta = beta;
    path.seed = seed;
    path.stream = stream;
    path.initial_law = law.describe();
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) y(k) = decay(k) * y(k) + noise_sd(k) * rng.normal();
        path.obs.row(i) = (theta + Q * y).transpose();
    }
    return path;
}

SamplePath sample_em_path(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          double beta, double eta, int n, int substeps,
                          const InitialLaw& law, uint64_t seed, uint64_t stream) {
    if (eta <= 0.0 || n < 1 || substeps < 1)
        throw ConfigError("sample_em_path: need eta > 0, n >= 1, substeps >= 1");
    if (beta <= 0.0) throw ConfigError("sample_em_path: beta must be positive");
    int d = pot.dim_x();
    if (theta.size() != d) throw ConfigError("sample_em_path: theta has wrong dimension");

    RngStream rng(seed, stream);
    double dt = eta / substeps;
    double sd = std::sqrt(2.0 * dt / beta);
    Eigen::VectorXd x = draw_initial(pot, theta, beta, law, rng);

    SamplePath path;
    path.obs.resize(n, d);
    path.eta = eta;
    path.beta = beta;
    path.seed = seed;
    path.stream = stream;
    path.initial_law = law.describe();
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < substeps; ++s) {
            Eigen::VectorXd g = pot.grad_x(theta, x);
            for (int k = 0; k < d; ++k) x(k) += -g(k) * dt + sd * rng.normal();
        }
        if (!x.allFinite()) throw Diverged("sample_em_path: state became non-finite");
        path.obs.row(i) = x.transpose();
    }
    return path;
}

BatchSet sample_batches(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                        double beta, double eta, int m, int n, int substeps,
                        const InitialLaw& law, uint64_t seed, uint64_t base_index) {
    if (m < 1) throw ConfigError("sample_batches: need m >= 1");
    const auto* quad = dynamic_cast<const QuadraticPotential*>(&pot);
    if (substeps == 0 && !quad)
        throw ConfigError("sample_batches: substeps = 0 requires a quadratic potential");
    BatchSet set;
    set.batches.resize(size_t(m));
    // Each batch owns the substream ("batch", base_index + b), so the result
    // is byte-identical for any thread count.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < m; ++b) {
        try {
            uint64_t stream = substream("batch", base_index + uint64_t(b));
            if (substeps == 0)
                set.batches[size_t(b)] =
                    sample_ou_path(*quad, theta, beta, eta, n, law, seed, stream);
            else
                set.batches[size_t(b)] =
                    sample_em_path(pot, theta, beta, eta, n, substeps, law, seed, stream);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return set;
}

void write_path_csv(const std::filesystem::path& file, const SamplePath& path) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << "i,t";
    for (int c = 0; c < path.d(); ++c) out << ",x_" << (c + 1);
    out << "\n";
    for (int i = 0; i < path.n(); ++i) {
        out << (i + 1) << "," << format_double(double(i + 1) * path.eta);
        for (int c = 0; c < path.d(); ++c) out << "," << format_double(path.obs(i, c));
        out << "\n";
    }
}

void write_path_meta(const std::filesystem::path& file, const SamplePath& path) {
    nlohmann::json meta;
    meta["seed"] = path.seed;
    meta["stream"] = path.stream;
    meta["eta"] = path.eta;
    meta["beta"] = path.beta;
    meta["initial_law"] = path.initial_law;
    meta["observations"] = path.n();
    meta["dimension"] = path.d();
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot open " + file.string());
    out << meta.dump(2) << "\n";
}

} // namespace wgf
