#pragma once
// Discrete optimal transport between node-atomized densities on a shared
// grid: exact quadratic cost via quantile matching, banded couplings via a
// min-cost-flow linear program, and the drift induced by a coupling.

#include <filesystem>
#include <vector>

#include "wgf/grid.hpp"

namespace wgf {

// Banded transport plan between the atomizations of two densities. Entries
// are stored in density scale: the mass moved from node i to node j is
// p(i,j) h^2, so row sums give rho_o[i]/h and column sums rho_s[j]/h.
struct Coupling {
    Grid1D grid;
    int w = 1; // band half-width: entries only for |i - j| <= w

    std::vector<int> row_lo;     // first column of each row's band
    std::vector<int> row_len;
    std::vector<size_t> row_off; // offset of each row in p
    std::vector<double> p;

    double p_at(int i, int j) const;
    // Transported squared distance h^4 sum (i-j)^2 p(i,j).
    double cost() const;
    double row_sum(int i) const;
    double col_sum(int j) const;
};

// Squared 2-Wasserstein distance between the atomic measures with mass
// rho[i] h at node x_i, computed by monotone quantile matching. Exact for
// the atomic measures, so it agrees with the unrestricted transport LP.
double w2_quantile(const DensityGrid& rho_a, const DensityGrid& rho_b);

// Squared 2-Wasserstein distance between the histogram measures that spread
// each node mass uniformly over its cell [x_i - h/2, x_i + h/2]. The atomic
// distance cannot see displacements below one cell (mass hops whole cells,
// so a shift by epsilon < h costs epsilon h rather than epsilon^2); the
// histogram distance resolves them, which matters when consecutive iterates
// of a proximal scheme move by a fraction of a cell. Exact for the
// histograms via piecewise-linear quantile functions.
double w2_histogram(const DensityGrid& rho_a, const DensityGrid& rho_b);

// Minimum-cost coupling restricted to the band |i - j| <= w. Throws
// BandInfeasible when the band admits no plan with the given marginals.
// w = 1 uses a closed-form O(J) construction; wider bands solve the flow
// problem by successive shortest paths.
Coupling banded_coupling(const DensityGrid& rho_o, const DensityGrid& rho_s, int w);

// banded_coupling with automatic widening: starts at w and doubles the band
// (capped at J) until feasible.
Coupling banded_coupling_widening(const DensityGrid& rho_o, const DensityGrid& rho_s, int w);

// Drift induced by the coupling at node j: h sum_i (x_j - x_i) p(i,j).
double coupling_drift(const Coupling& c, int j);
std::vector<double> coupling_drift_all(const Coupling& c);

void write_coupling_csv(const std::filesystem::path& file, const Coupling& c);

} // namespace wgf
