#include "wgf/transport1d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>

namespace wgf {

namespace {

// Node masses of the atomization of rho, in visiting order.
std::vector<double> atom_masses(const DensityGrid& rho) {
    std::vector<double> a(rho.v.size());
    double h = rho.grid.h();
    for (size_t j = 0; j < a.size(); ++j) {
        double r = rho.v[j];
        if (r < 0.0 || !std::isfinite(r))
            throw ConfigError("transport: density has negative or non-finite entries");
        a[j] = r * h;
    }
    return a;
}

void normalize_masses(std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v;
    if (s <= 0.0) throw AllMassLost("transport: density has no mass");
    for (double& v : a) v /= s;
}

} // namespace

double Coupling::p_at(int i, int j) const {
    if (i < 0 || i > grid.J || j < row_lo[size_t(i)] || j >= row_lo[size_t(i)] + row_len[size_t(i)])
        return 0.0;
    return p[row_off[size_t(i)] + size_t(j - row_lo[size_t(i)])];
}

double Coupling::cost() const {
    double h = grid.h();
    double s = 0.0;
    for (int i = 0; i <= grid.J; ++i)
        for (int k = 0; k < row_len[size_t(i)]; ++k) {
            double d = double(i - (row_lo[size_t(i)] + k));
            s += d * d * p[row_off[size_t(i)] + size_t(k)];
        }
    return s * h * h * h * h;
}

double Coupling::row_sum(int i) const {
    double s = 0.0;
    for (int k = 0; k < row_len[size_t(i)]; ++k) s += p[row_off[size_t(i)] + size_t(k)];
    return s;
}

double Coupling::col_sum(int j) const {
    double s = 0.0;
    for (int i = std::max(0, j - w); i <= std::min(grid.J, j + w); ++i) s += p_at(i, j);
    return s;
}

double w2_quantile(const DensityGrid& rho_a, const DensityGrid& rho_b) {
    check_same_grid(rho_a.grid, rho_b.grid, "w2_quantile");
    std::vector<double> a = atom_masses(rho_a);
    std::vector<double> b = atom_masses(rho_b);
    normalize_masses(a);
    normalize_masses(b);

    const Grid1D& g = rho_a.grid;
    double cost = 0.0;
    size_t i = 0, j = 0;
    double ai = a[0], bj = b[0];
    while (i < a.size() && j < b.size()) {
        double du = std::min(ai, bj);
        if (du > 0.0) {
            double d = g.x(int(i)) - g.x(int(j));
            cost += du * d * d;
        }
        ai -= du;
        bj -= du;
        if (ai <= 0.0) {
            ++i;
            if (i < a.size()) ai = a[i];
        }
        if (bj <= 0.0) {
            ++j;
            if (j < b.size()) bj = b[j];
        }
    }
    return cost;
}

double w2_histogram(const DensityGrid& rho_a, const DensityGrid& rho_b) {
    check_same_grid(rho_a.grid, rho_b.grid, "w2_histogram");
    std::vector<double> a = atom_masses(rho_a);
    std::vector<double> b = atom_masses(rho_b);
    normalize_masses(a);
    normalize_masses(b);

    const Grid1D& g = rho_a.grid;
    const double h = g.h();
    const size_t n = a.size();

    size_t ia = 0, ib = 0;
    while (ia < n && a[ia] <= 0.0) ++ia;
    while (ib < n && b[ib] <= 0.0) ++ib;
    double ca = 0.0, cb = 0.0; // mass already consumed in the current cells
    double cost = 0.0;
    while (ia < n && ib < n) {
        double left_a = a[ia] - ca;
        double left_b = b[ib] - cb;
        double du = std::min(left_a, left_b);
        if (du > 0.0) {
            // Both quantile functions are linear on this mass subinterval,
            // so the squared difference integrates exactly.
            double qa0 = g.x(int(ia)) - 0.5 * h + (ca / a[ia]) * h;
            double qb0 = g.x(int(ib)) - 0.5 * h + (cb / b[ib]) * h;
            double qa1 = qa0 + (du / a[ia]) * h;
            double qb1 = qb0 + (du / b[ib]) * h;
            double d0 = qa0 - qb0, d1 = qa1 - qb1;
            cost += du * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
        }
        bool fin_a = left_a <= left_b;
        bool fin_b = left_b <= left_a;
        ca += du;
        cb += du;
        if (fin_a) {
            ++ia;
            while (ia < n && a[ia] <= 0.0) ++ia;
            ca = 0.0;
        }
        if (fin_b) {
            ++ib;
            while (ib < n && b[ib] <= 0.0) ++ib;
            cb = 0.0;
        }
    }
    return cost;
}

namespace {

Coupling make_coupling_shell(const Grid1D& g, int w) {
    Coupling c;
    c.grid = g;
    c.w = w;
    int n = g.J + 1;
    c.row_lo.resize(size_t(n));
    c.row_len.resize(size_t(n));
    c.row_off.resize(size_t(n));
    size_t off = 0;
    for (int i = 0; i < n; ++i) {
        int lo = std::max(0, i - w);
        int hi = std::min(g.J, i + w);
        c.row_lo[size_t(i)] = lo;
        c.row_len[size_t(i)] = hi - lo + 1;
        c.row_off[size_t(i)] = off;
        off += size_t(hi - lo + 1);
    }
    c.p.assign(off, 0.0);
    return c;
}

// Band half-width 1: the net flow across each cut is forced, the minimum
// cost plan keeps at most one of the two crossing directions active, and
// the diagonal picks up the remainder. O(J) and exact.
Coupling tridiagonal_coupling(const Grid1D& g, const std::vector<double>& a,
                              const std::vector<double>& b) {
    int n = g.J + 1;
    double scale = *std::max_element(a.begin(), a.end());
    double slack = 1e-12 * std::max(scale, 1e-30);

    std::vector<double> right(size_t(n), 0.0), left(size_t(n), 0.0);
    double cum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        cum += a[size_t(i)] - b[size_t(i)];
        if (cum >= 0.0)
            right[size_t(i)] = cum;
        else
            left[size_t(i)] = -cum;
    }

    Coupling c = make_coupling_shell(g, 1);
    double h = g.h();
    for (int i = 0; i < n; ++i) {
        double from_left = i > 0 ? left[size_t(i - 1)] : 0.0;
        double diag = a[size_t(i)] - right[size_t(i)] - from_left;
        if (diag < -slack)
            throw BandInfeasible("banded_coupling: width 1 infeasible at node " +
                                 std::to_string(i));
        diag = std::max(diag, 0.0);
        size_t off = c.row_off[size_t(i)];
        int lo = c.row_lo[size_t(i)];
        c.p[off + size_t(i - lo)] = diag / (h * h);
        if (i + 1 < n) c.p[off + size_t(i + 1 - lo)] = right[size_t(i)] / (h * h);
        if (i > 0) c.p[off + size_t(i - 1 - lo)] = left[size_t(i - 1)] / (h * h);
    }
    return c;
}

// Successive shortest paths with integer arc costs (i - j)^2 and real
// capacities. Node layout: 0 = source, 1..n = rows, n+1..2n = columns,
// 2n+1 = sink.
struct FlowArc {
    int to;
    double cap;
    long long cost;
    int rev;
};

class FlowGraph {
public:
    explicit FlowGraph(int nodes) : g_(size_t(nodes)) {}

    void add(int u, int v, double cap, long long cost) {
        g_[size_t(u)].push_back({v, cap, cost, int(g_[size_t(v)].size())});
        g_[size_t(v)].push_back({u, 0.0, -cost, int(g_[size_t(u)].size()) - 1});
    }

    std::vector<std::vector<FlowArc>> g_;
};

Coupling lp_coupling(const Grid1D& g, int w, const std::vector<double>& a,
                     const std::vector<double>& b) {
    int n = g.J + 1;
    int source = 0, sink = 2 * n + 1;
    FlowGraph fg(2 * n + 2);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (a[size_t(i)] > 0.0) {
            fg.add(source, 1 + i, a[size_t(i)], 0);
            total += a[size_t(i)];
        }
        if (b[size_t(i)] > 0.0) fg.add(1 + n + i, sink, b[size_t(i)], 0);
        int lo = std::max(0, i - w), hi = std::min(g.J, i + w);
        for (int j = lo; j <= hi; ++j) {
            long long d = i - j;
            fg.add(1 + i, 1 + n + j, std::numeric_limits<double>::infinity(), d * d);
        }
    }

    const int nn = 2 * n + 2;
    const long long inf_cost = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> pot(size_t(nn), 0), dist(size_t(nn), 0);
    std::vector<int> prev_node(size_t(nn), -1), prev_arc(size_t(nn), -1);
    double remaining = total;
    const double tol = 1e-13 * std::max(total, 1e-30);

    while (remaining > tol) {
        std::fill(dist.begin(), dist.end(), inf_cost);
        dist[size_t(source)] = 0;
        using QE = std::pair<long long, int>;
        std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
        pq.push({0, source});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du > dist[size_t(u)]) continue;
            for (int k = 0; k < int(fg.g_[size_t(u)].size()); ++k) {
                const FlowArc& arc = fg.g_[size_t(u)][size_t(k)];
                if (arc.cap <= 0.0) continue;
                long long nd = du + arc.cost + pot[size_t(u)] - pot[size_t(arc.to)];
                if (nd < dist[size_t(arc.to)]) {
                    dist[size_t(arc.to)] = nd;
                    prev_node[size_t(arc.to)] = u;
                    prev_arc[size_t(arc.to)] = k;
                    pq.push({nd, arc.to});
                }
            }
        }
        if (dist[size_t(sink)] >= inf_cost)
            throw BandInfeasible("banded_coupling: width " + std::to_string(w) +
                                 " admits no feasible plan");
        for (int u = 0; u < nn; ++u)
            if (dist[size_t(u)] < inf_cost) pot[size_t(u)] += dist[size_t(u)];

        double push = remaining;
        for (int u = sink; u != source; u = prev_node[size_t(u)]) {
            const FlowArc& arc = fg.g_[size_t(prev_node[size_t(u)])][size_t(prev_arc[size_t(u)])];
            push = std::min(push, arc.cap);
        }
        for (int u = sink; u != source; u = prev_node[size_t(u)]) {
            FlowArc& arc = fg.g_[size_t(prev_node[size_t(u)])][size_t(prev_arc[size_t(u)])];
            arc.cap -= push;
            fg.g_[size_t(arc.to)][size_t(arc.rev)].cap += push;
        }
        remaining -= push;
    }

    Coupling c = make_coupling_shell(g, w);
    double h = g.h();
    for (int i = 0; i < n; ++i) {
        for (const FlowArc& arc : fg.g_[size_t(1 + i)]) {
            if (arc.to < 1 + n || arc.to > 2 * n) continue;
            int j = arc.to - 1 - n;
            // Flow on a forward arc equals the capacity of its reverse arc.
            double flow = fg.g_[size_t(arc.to)][size_t(arc.rev)].cap;
            if (arc.cost >= 0 && flow > 0.0)
                c.p[c.row_off[size_t(i)] + size_t(j - c.row_lo[size_t(i)])] = flow / (h * h);
        }
    }
    return c;
}

} // namespace

Coupling banded_coupling(const DensityGrid& rho_o, const DensityGrid& rho_s, int w) {
    check_same_grid(rho_o.grid, rho_s.grid, "banded_coupling");
    const Grid1D& g = rho_o.grid;
    if (w < 0 || w > g.J) throw ConfigError("banded_coupling: band width out of range");

    std::vector<double> a = atom_masses(rho_o);
    std::vector<double> b = atom_masses(rho_s);
    // Equalize totals so the transportation problem balances exactly.
    double sa = 0.0, sb = 0.0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    if (sa <= 0.0 || sb <= 0.0) throw AllMassLost("banded_coupling: density has no mass");
    for (double& v : b) v *= sa / sb;

    if (w == 0) {
        double scale = *std::max_element(a.begin(), a.end());
        Coupling c = make_coupling_shell(g, 0);
        double h = g.h();
        for (int i = 0; i <= g.J; ++i) {
            if (std::fabs(a[size_t(i)] - b[size_t(i)]) > 1e-12 * std::max(scale, 1e-30))
                throw BandInfeasible("banded_coupling: width 0 needs equal marginals");
            c.p[c.row_off[size_t(i)]] = a[size_t(i)] / (h * h);
        }
        return c;
    }
    if (w == 1) return tridiagonal_coupling(g, a, b);
    return lp_coupling(g, w, a, b);
}

Coupling banded_coupling_widening(const DensityGrid& rho_o, const DensityGrid& rho_s, int w) {
    int cur = std::max(w, 0);
    for (;;) {
        try {
            return banded_coupling(rho_o, rho_s, cur);
        } catch (const BandInfeasible&) {
            if (cur >= rho_o.grid.J) throw;
            cur = std::min(cur == 0 ? 1 : 2 * cur, rho_o.grid.J);
        }
    }
}

double coupling_drift(const Coupling& c, int j) {
    const Grid1D& g = c.grid;
    double h = g.h();
    double s = 0.0;
    for (int i = std::max(0, j - c.w); i <= std::min(g.J, j + c.w); ++i)
        s += (g.x(j) - g.x(i)) * c.p_at(i, j);
    return s * h;
}

std::vector<double> coupling_drift_all(const Coupling& c) {
    const Grid1D& g = c.grid;
    std::vector<double> out(size_t(g.J) + 1, 0.0);
    double h = g.h();
    for (int i = 0; i <= g.J; ++i) {
        size_t off = c.row_off[size_t(i)];
        for (int k = 0; k < c.row_len[size_t(i)]; ++k) {
            int j = c.row_lo[size_t(i)] + k;
            out[size_t(j)] += (g.x(j) - g.x(i)) * c.p[off + size_t(k)] * h;
        }
    }
    return out;
}

void write_coupling_csv(const std::filesystem::path& file, const Coupling& c) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << "i,j,p\n";
    for (int i = 0; i <= c.grid.J; ++i)
        for (int k = 0; k < c.row_len[size_t(i)]; ++k) {
            double v = c.p[c.row_off[size_t(i)] + size_t(k)];
            if (v != 0.0)
                out << i << ',' << (c.row_lo[size_t(i)] + k) << ',' << format_double(v) << '\n';
        }
}

} // namespace wgf
