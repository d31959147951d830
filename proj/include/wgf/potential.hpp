#pragma once
// Parametric confining potentials psi_theta(x), their Gibbs densities, and
// the scaled direction field tau built from a parameter covariance root.

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "wgf/grid.hpp"

namespace wgf {

// Smooth potential psi_theta: R^d -> R with parameter theta in R^q.
class ParametricPotential {
public:
    virtual ~ParametricPotential() = default;

    virtual int dim_x() const = 0;
    virtual int dim_theta() const = 0;
    virtual std::string id() const = 0;

    virtual double psi(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd grad_x(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd grad_theta(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const = 0;

    // Mixed derivative d/dtheta_k of (grad_x psi)_i, a dim_x by dim_theta matrix.
    virtual Eigen::MatrixXd grad_theta_grad_x(const Eigen::VectorXd& theta,
                                              const Eigen::VectorXd& x) const = 0;

    virtual bool is_quadratic() const { return false; }

    // Scalar conveniences for d = q = 1 problems.
    double psi1(double theta, double x) const;
    double grad_x1(double theta, double x) const;
};

// psi_theta(x) = (x - theta)' A (x - theta) / 2 with A symmetric positive
// definite; theta has the same dimension as x.
class QuadraticPotential final : public ParametricPotential {
public:
    explicit QuadraticPotential(int d);
    explicit QuadraticPotential(Eigen::MatrixXd A);

    int dim_x() const override { return int(A_.rows()); }
    int dim_theta() const override { return int(A_.rows()); }
    std::string id() const override { return "quadratic"; }

    double psi(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd grad_x(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd grad_theta(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::MatrixXd grad_theta_grad_x(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& x) const override;
    bool is_quadratic() const override { return true; }

    const Eigen::MatrixXd& A() const { return A_; }

private:
    Eigen::MatrixXd A_;
};

// Scalar double-well psi_theta(x) = (x^2 - theta)^2 / 4, q = d = 1. Used to
// exercise the non-quadratic code paths.
class DoubleWellPotential final : public ParametricPotential {
public:
    int dim_x() const override { return 1; }
    int dim_theta() const override { return 1; }
    std::string id() const override { return "double_well"; }

    double psi(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd grad_x(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::VectorXd grad_theta(const Eigen::VectorXd& theta, const Eigen::VectorXd& x) const override;
    Eigen::MatrixXd grad_theta_grad_x(const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& x) const override;
};

std::unique_ptr<ParametricPotential> make_potential(const std::string& id, int d);

// Normalized Gibbs density exp(-beta psi_theta) / Z on the grid nodes,
// normalized by the trapezoid rule so downstream mass checks are exact.
DensityGrid gibbs_density(const ParametricPotential& pot, const Eigen::VectorXd& theta,
                          double beta, const Grid1D& grid);

// Symmetric positive semidefinite square root; small negative eigenvalues
// from roundoff are clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

// Asymptotic variance of the stationary mean estimator for the unit-rate
// scalar process observed at spacing eta: (1 + e^-eta) / (1 - e^-eta).
double ou_gamma_sq(double eta);

// Direction field tau(x) = grad_theta' psi_theta(x) * gamma and its spatial
// gradient, for a fixed parameter and covariance root gamma.
struct TauField {
    const ParametricPotential* pot = nullptr;
    Eigen::VectorXd theta;
    Eigen::MatrixXd gamma; // q x q

    // 1 x q row for d = 1 potentials evaluated at scalar x.
    Eigen::RowVectorXd tau(double x) const;
    // d/dx of each tau component, again 1 x q for d = 1.
    Eigen::RowVectorXd grad_tau(double x) const;
};

} // namespace wgf
