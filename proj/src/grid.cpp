#include "wgf/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wgf {

DensityGrid FieldGrid::slice(int i) const {
    DensityGrid rho(grid);
    for (int j = 0; j <= grid.J; ++j) rho[j] = at(i, j);
    return rho;
}

void check_same_grid(const Grid1D& a, const Grid1D& b, const char* where) {
    if (!(a == b)) {
        throw GridMismatch(std::string(where) + ": grids differ (D=" +
                           std::to_string(a.D) + ",J=" + std::to_string(a.J) + ") vs (D=" +
                           std::to_string(b.D) + ",J=" + std::to_string(b.J) + ")");
    }
}

double trapezoid(const Grid1D& g, const std::vector<double>& values) {
    if (int(values.size()) != g.J + 1)
        throw GridMismatch("trapezoid: value count does not match grid nodes");
    double s = 0.5 * (values.front() + values.back());
    for (int j = 1; j < g.J; ++j) s += values[size_t(j)];
    return s * g.h();
}

double mass(const DensityGrid& rho) { return trapezoid(rho.grid, rho.v); }

double second_moment(const DensityGrid& rho) {
    std::vector<double> f(rho.v.size());
    for (int j = 0; j <= rho.grid.J; ++j) {
        double x = rho.grid.x(j);
        f[size_t(j)] = x * x * rho[j];
    }
    return trapezoid(rho.grid, f);
}

double entropy(const DensityGrid& rho) {
    std::vector<double> f(rho.v.size(), 0.0);
    for (int j = 0; j <= rho.grid.J; ++j) {
        double r = rho[j];
        if (r > 1e-300) f[size_t(j)] = -r * std::log(r);
    }
    return trapezoid(rho.grid, f);
}

double potential_energy(const DensityGrid& rho, const std::function<double(double)>& psi) {
    std::vector<double> f(rho.v.size());
    for (int j = 0; j <= rho.grid.J; ++j) f[size_t(j)] = psi(rho.grid.x(j)) * rho[j];
    return trapezoid(rho.grid, f);
}

double free_energy(const DensityGrid& rho, const std::function<double(double)>& psi, double beta) {
    return potential_energy(rho, psi) - entropy(rho) / beta;
}

double l1_distance(const DensityGrid& a, const DensityGrid& b) {
    check_same_grid(a.grid, b.grid, "l1_distance");
    std::vector<double> f(a.v.size());
    for (size_t j = 0; j < f.size(); ++j) f[j] = std::fabs(a.v[j] - b.v[j]);
    return trapezoid(a.grid, f);
}

DensityGrid renormalize(const DensityGrid& rho) {
    DensityGrid out = rho;
    renormalize_in_place(out);
    return out;
}

void renormalize_in_place(DensityGrid& rho) {
    double m = mass(rho);
    if (!std::isfinite(m) || m <= 0.0)
        throw AllMassLost("renormalize: total mass " + std::to_string(m));
    for (double& r : rho.v) r /= m;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& file,
                                               size_t expect_cols) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != expect_cols)
            throw ConfigError("malformed row in " + file.string());
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

void write_density_csv(const std::filesystem::path& file, const DensityGrid& rho) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << "x,value\n";
    for (int j = 0; j <= rho.grid.J; ++j)
        out << format_double(rho.grid.x(j)) << ',' << format_double(rho[j]) << '\n';
}

DensityGrid read_density_csv(const std::filesystem::path& file) {
    auto rows = read_csv_rows(file, 2);
    if (rows.size() < 5) throw ConfigError("density file too short: " + file.string());
    int J = int(rows.size()) - 1;
    double D = std::fabs(rows.front()[0]);
    DensityGrid rho(Grid1D{D, J});
    for (int j = 0; j <= J; ++j) rho[j] = rows[size_t(j)][1];
    return rho;
}

void write_field_csv(const std::filesystem::path& file, const FieldGrid& f) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << "t,x,value\n";
    for (int i = 0; i <= f.time.I; ++i)
        for (int j = 0; j <= f.grid.J; ++j)
            out << format_double(f.time.t(i)) << ',' << format_double(f.grid.x(j)) << ','
                << format_double(f.at(i, j)) << '\n';
}

FieldGrid read_field_csv(const std::filesystem::path& file) {
    auto rows = read_csv_rows(file, 3);
    // Count nodes per time slice from the first column.
    size_t cols = 0;
    for (size_t r = 1; r < rows.size(); ++r) {
        if (rows[r][0] != rows[0][0]) { cols = r; break; }
    }
    if (cols < 2 || rows.size() % cols != 0)
        throw ConfigError("malformed field file: " + file.string());
    int J = int(cols) - 1;
    int I = int(rows.size() / cols) - 1;
    double D = std::fabs(rows.front()[1]);
    double T = rows.back()[0];
    FieldGrid f(Grid1D{D, J}, TimeGrid{T, I});
    for (int i = 0; i <= I; ++i)
        for (int j = 0; j <= J; ++j) f.at(i, j) = rows[size_t(i) * cols + j][2];
    return f;
}

} // namespace wgf
