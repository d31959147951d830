#include "wgf/potential.hpp"

#include <cmath>

namespace wgf {

double ParametricPotential::psi1(double theta, double x) const {
    Eigen::VectorXd th(1), xx(1);
    th << theta;
    xx << x;
    return psi(th, xx);
}

double ParametricPotential::grad_x1(double theta, double x) const {
    Eigen::VectorXd th(1), xx(1);
    th << theta;
    xx << x;
    return grad_x(th, xx)(0);
}

QuadraticPotential::QuadraticPotential(int d) : A_(Eigen::MatrixXd::Identity(d, d)) {}

QuadraticPotential::QuadraticPotential(Eigen::MatrixXd A) : A_(std::move(A)) {
    if (A_.rows() != A_.cols()) throw ConfigError("quadratic potential: A must be square");
    if (!A_.isApprox(A_.transpose(), 1e-12))
        throw ConfigError("quadratic potential: A must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(A_);
    if (llt.info() != Eigen::Success)
        throw ConfigError("quadratic potential: A must be positive definite");
}

double QuadraticPotential::psi(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const {
    Eigen::VectorXd r = x - theta;
    return 0.5 * r.dot(A_ * r);
}

Eigen::VectorXd QuadraticPotential::grad_x(const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& x) const {
    return A_ * (x - theta);
}

Eigen::VectorXd QuadraticPotential::grad_theta(const Eigen::VectorXd& theta,
                                               const Eigen::VectorXd& x) const {
    return -(A_ * (x - theta));
}

Eigen::MatrixXd QuadraticPotential::grad_theta_grad_x(const Eigen::VectorXd&,
                                                      const Eigen::VectorXd&) const {
    return -A_;
}

double DoubleWellPotential::psi(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const {
    double u = x(0) * x(0) - theta(0);
    return 0.25 * u * u;
}

Eigen::VectorXd DoubleWellPotential::grad_x(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(1);
    g(0) = (x(0) * x(0) - theta(0)) * x(0);
    return g;
}

Eigen::VectorXd DoubleWellPotential::grad_theta(const Eigen::VectorXd& theta,
                                                const Eigen::VectorXd& x) const {
    Eigen::VectorXd g(1);
    g(0) = -0.5 * (x(0) * x(0) - theta(0));
    return g;
}

Eigen::MatrixXd DoubleWellPotential::grad_theta_grad_x(const Eigen::VectorXd&,
                                                       const Eigen::VectorXd& x) const {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = -x(0);
    return m;
}

std::unique_ptr<ParametricPotential> make_potential(const std::string& id, int d) {
    if (id == "quadratic") return std::make_unique<QuadraticPotential>(d);
    if (id == "double_well") {
        if (d != 1) throw ConfigError("double_well potential is scalar only");
        return std::make_unique<DoubleWellPotential>();
    }
    throw ConfigError("unknown potential id: " + id);
}

DensityGrid gibbs_density(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          double beta, const Grid1D& grid) {
    if (pot.dim_x() != 1) throw ConfigError("gibbs_density: grid densities are 1-d");
    if (beta <= 0.0) throw ConfigError("gibbs_density: beta must be positive");
    DensityGrid rho(grid);
    Eigen::VectorXd xx(1);
    for (int j = 0; j <= grid.J; ++j) {
        xx(0) = grid.x(j);
        rho[j] = std::exp(-beta * pot.psi(theta, xx));
    }
    renormalize_in_place(rho);
    return rho;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd lam = es.eigenvalues();
    for (int i = 0; i < lam.size(); ++i) lam(i) = lam(i) > 0.0 ? std::sqrt(lam(i)) : 0.0;
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

double ou_gamma_sq(double eta) {
    if (eta <= 0.0) throw ConfigError("ou_gamma_sq: eta must be positive");
    double e = std::exp(-eta);
    return (1.0 + e) / (1.0 - e);
}

Eigen::RowVectorXd TauField::tau(double x) const {
    Eigen::VectorXd xx(1);
    xx(0) = x;
    return pot->grad_theta(theta, xx).transpose() * gamma;
}

Eigen::RowVectorXd TauField::grad_tau(double x) const {
    Eigen::VectorXd xx(1);
    xx(0) = x;
    return pot->grad_theta_grad_x(theta, xx).row(0) * gamma;
}

} // namespace wgf
