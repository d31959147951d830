#pragma once
// Uniform 1-d grids on [-D, D], time grids on [0, T], densities and
// space-time fields stored at nodes, trapezoid functionals, and CSV I/O.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wgf/errors.hpp"

namespace wgf {

struct Grid1D {
    double D = 5.0; // half-width of the domain
    int J = 200;    // number of cells; J+1 nodes

    double h() const { return 2.0 * D / J; }
    double x(int j) const { return -D + j * h(); }
    bool operator==(const Grid1D&) const = default;
};

struct TimeGrid {
    double T = 0.5; // horizon
    int I = 50;     // number of steps; I+1 nodes

    double dt() const { return T / I; }
    double t(int i) const { return i * dt(); }
    bool operator==(const TimeGrid&) const = default;
};

// Probability density sampled at grid nodes.
struct DensityGrid {
    Grid1D grid;
    std::vector<double> v;

    DensityGrid() = default;
    explicit DensityGrid(Grid1D g) : grid(g), v(size_t(g.J) + 1, 0.0) {}

    double& operator[](int j) { return v[size_t(j)]; }
    double operator[](int j) const { return v[size_t(j)]; }
    int nodes() const { return int(v.size()); }
};

// Scalar space-time field sampled at (t_i, x_j), row-major in time.
struct FieldGrid {
    Grid1D grid;
    TimeGrid time;
    std::vector<double> v;

    FieldGrid() = default;
    FieldGrid(Grid1D g, TimeGrid tg)
        : grid(g), time(tg), v(size_t(tg.I + 1) * size_t(g.J + 1), 0.0) {}

    double& at(int i, int j) { return v[size_t(i) * (grid.J + 1) + j]; }
    double at(int i, int j) const { return v[size_t(i) * (grid.J + 1) + j]; }

    // Density slice at time index i (copies the row).
    DensityGrid slice(int i) const;
};

void check_same_grid(const Grid1D& a, const Grid1D& b, const char* where);

// Trapezoid rule over the nodes of g; values must have J+1 entries.
double trapezoid(const Grid1D& g, const std::vector<double>& values);

double mass(const DensityGrid& rho);
double second_moment(const DensityGrid& rho);

// Differential entropy -Int rho log rho with 0 log 0 = 0; values below
// 1e-300 are treated as zero to keep the integrand finite.
double entropy(const DensityGrid& rho);

// Int psi rho for a pointwise potential.
double potential_energy(const DensityGrid& rho, const std::function<double(double)>& psi);

// Int psi rho - entropy / beta.
double free_energy(const DensityGrid& rho, const std::function<double(double)>& psi, double beta);

// L1 distance between densities on the same grid.
double l1_distance(const DensityGrid& a, const DensityGrid& b);

// Scales to unit mass; throws AllMassLost if mass is non-positive or
// non-finite.
DensityGrid renormalize(const DensityGrid& rho);
void renormalize_in_place(DensityGrid& rho);

// Formats with enough digits for an exact round trip.
std::string format_double(double x);

void write_density_csv(const std::filesystem::path& file, const DensityGrid& rho);
DensityGrid read_density_csv(const std::filesystem::path& file);

void write_field_csv(const std::filesystem::path& file, const FieldGrid& f);
FieldGrid read_field_csv(const std::filesystem::path& file);

} // namespace wgf
