#include "wgf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "wgf/errors.hpp"

namespace wgf {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kLeft = 64;
constexpr int kRight = 24;
constexpr int kTop = 40;
constexpr int kBottom = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    void widen(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finalize() {
        if (hi <= lo) hi = lo + 1.0;
        double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    double frac(double v) const { return (v - lo) / (hi - lo); }
};

void open_canvas(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">"
        << title << "</text>\n";
}

void draw_frame(std::ofstream& out, const Range& rx, const Range& ry) {
    int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << (x1 - x0)
        << "\" height=\"" << (y0 - y1) << "\" fill=\"none\" stroke=\"#444444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double fx = k / 4.0;
        double px = x0 + fx * (x1 - x0);
        double py = y0 - fx * (y0 - y1);
        out << "<text x=\"" << num(px) << "\" y=\"" << (y0 + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(rx.lo + fx * (rx.hi - rx.lo)) << "</text>\n";
        out << "<text x=\"" << (x0 - 6) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(ry.lo + fx * (ry.hi - ry.lo)) << "</text>\n";
    }
}

double px_of(const Range& rx, double v) {
    return kLeft + rx.frac(v) * (kWidth - kLeft - kRight);
}

double py_of(const Range& ry, double v) {
    return (kHeight - kBottom) - ry.frac(v) * (kHeight - kTop - kBottom);
}

std::string level_color(double f) {
    // Blue through light gray to red.
    auto lerp = [](int a, int b, double s) { return int(std::lround(a + s * (b - a))); };
    int r, g, b;
    if (f < 0.5) {
        double s = 2.0 * f;
        r = lerp(0x21, 0xd9, s);
        g = lerp(0x66, 0xd9, s);
        b = lerp(0xac, 0xd9, s);
    } else {
        double s = 2.0 * f - 1.0;
        r = lerp(0xd9, 0xb2, s);
        g = lerp(0xd9, 0x18, s);
        b = lerp(0xd9, 0x2b, s);
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

} // namespace

void write_line_svg(const std::filesystem::path& file, const std::string& title,
                    const std::vector<SvgSeries>& series) {
    Range rx, ry;
    rx.lo = ry.lo = std::numeric_limits<double>::infinity();
    rx.hi = ry.hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw ConfigError("write_line_svg: series \"" + s.label + "\" has mismatched sizes");
        for (double v : s.x) rx.widen(v);
        for (double v : s.y) ry.widen(v);
    }
    if (!std::isfinite(rx.lo)) rx = Range{};
    if (!std::isfinite(ry.lo)) ry = Range{};
    rx.finalize();
    ry.finalize();

    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + file.string());
    open_canvas(out, title);
    draw_frame(out, rx, ry);
    size_t ci = 0;
    for (const auto& s : series) {
        const char* color = kPalette[ci % (sizeof kPalette / sizeof kPalette[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (i) out << ' ';
            out << num(px_of(rx, s.x[i])) << ',' << num(py_of(ry, s.y[i]));
        }
        out << "\"/>\n";
        double ly = kTop + 16.0 + 16.0 * double(ci);
        out << "<line x1=\"" << (kWidth - kRight - 150) << "\" y1=\"" << num(ly - 4)
            << "\" x2=\"" << (kWidth - kRight - 126) << "\" y2=\"" << num(ly - 4)
            << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
            << "<text x=\"" << (kWidth - kRight - 120) << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

void write_contour_svg(const std::filesystem::path& file, const std::string& title,
                       const FieldGrid& field, int levels) {
    if (levels < 1) throw ConfigError("write_contour_svg: need at least one level");
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    for (int i = 0; i <= field.time.I; ++i)
        for (int j = 0; j <= field.grid.J; ++j) {
            double v = field.at(i, j);
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    if (!(vmax > vmin)) {
        vmin -= 1.0;
        vmax += 1.0;
    }
    Range rx{0.0, field.time.T};
    Range ry{-field.grid.D, field.grid.D};

    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + file.string());
    open_canvas(out, title);
    draw_frame(out, rx, ry);

    for (int lev = 0; lev < levels; ++lev) {
        double frac = (lev + 1.0) / (levels + 1.0);
        double c = vmin + frac * (vmax - vmin);
        out << "<g stroke=\"" << level_color(frac) << "\" stroke-width=\"1\" fill=\"none\">\n";
        for (int i = 0; i < field.time.I; ++i) {
            for (int j = 0; j < field.grid.J; ++j) {
                // Cell corners in (t, x): a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1).
                double va = field.at(i, j), vb = field.at(i + 1, j);
                double vc = field.at(i + 1, j + 1), vd = field.at(i, j + 1);
                auto inside = [&](double v) { return v >= c; };
                struct Pt {
                    double t, x;
                };
                Pt pts[4];
                int np = 0;
                auto edge = [&](double v0, double v1, double t0, double x0, double t1,
                                double x1) {
                    if (inside(v0) == inside(v1)) return;
                    double s = (c - v0) / (v1 - v0);
                    pts[np++] = {t0 + s * (t1 - t0), x0 + s * (x1 - x0)};
                };
                double t0 = field.time.t(i), t1 = field.time.t(i + 1);
                double x0 = field.grid.x(j), x1 = field.grid.x(j + 1);
                edge(va, vb, t0, x0, t1, x0); // bottom edge in t
                edge(vb, vc, t1, x0, t1, x1); // right edge in x
                edge(vd, vc, t0, x1, t1, x1); // top edge in t
                edge(va, vd, t0, x0, t0, x1); // left edge in x
                auto seg = [&](const Pt& p, const Pt& q) {
                    out << "<line x1=\"" << num(px_of(rx, p.t)) << "\" y1=\""
                        << num(py_of(ry, p.x)) << "\" x2=\"" << num(px_of(rx, q.t))
                        << "\" y2=\"" << num(py_of(ry, q.x)) << "\"/>\n";
                };
                if (np == 2) {
                    seg(pts[0], pts[1]);
                } else if (np == 4) {
                    // Saddle cell: pair crossings by the center value.
                    double center = 0.25 * (va + vb + vc + vd);
                    if (inside(center) == inside(va)) {
                        seg(pts[0], pts[1]);
                        seg(pts[2], pts[3]);
                    } else {
                        seg(pts[0], pts[3]);
                        seg(pts[1], pts[2]);
                    }
                }
            }
        }
        out << "</g>\n";
    }
    // Color bar keyed to the level values.
    int bx = kWidth - kRight - 160;
    out << "<text x=\"" << bx << "\" y=\"" << (kTop - 6)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << num(vmin) << " .. " << num(vmax)
        << "</text>\n";
    out << "</svg>\n";
}

} // namespace wgf
