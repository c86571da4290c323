#include "scpf/grid.hpp"

#include <cmath>
#include <stdexcept>

#include "scpf/errors.hpp"

namespace scpf {

Grid make_grid(int dim, int nx, int ny, int nz, double Lx, double Ly, double Lz) {
    if (dim != 2 && dim != 3)
        throw ConfigError("grid: dim must be 2 or 3");
    if (nx < 1 || ny < 1 || (dim == 3 && nz < 1))
        throw ConfigError("grid: node counts must be positive");
    if (!(Lx > 0) || !(Ly > 0) || (dim == 3 && !(Lz > 0)))
        throw ConfigError("grid: extents must be positive");

    Grid g;
    g.dim = dim;
    g.n = {nx, ny, dim == 3 ? nz : 1};
    g.L = {Lx, Ly, dim == 3 ? Lz : 0.0};
    g.h[0] = Lx / nx;
    g.h[1] = Ly / ny;
    g.h[2] = dim == 3 ? Lz / nz : 0.0;
    g.nn = static_cast<std::int64_t>(g.n[0]) * g.n[1] * g.n[2];
    g.cellvol = dim == 3 ? g.h[0] * g.h[1] * g.h[2] : g.h[0] * g.h[1];
    g.omega = dim == 3 ? Lx * Ly * Lz : Lx * Ly;
    g.gamma_area = dim == 3 ? 2.0 * (Lx * Ly + Ly * Lz + Lx * Lz)
                            : 2.0 * (Lx + Ly);

    g.trace_w.assign(static_cast<size_t>(g.nn), 0.0);
    for (int k = 0; k < g.n[2]; ++k)
        for (int j = 0; j < g.n[1]; ++j)
            for (int i = 0; i < g.n[0]; ++i) {
                double w = 0.0;
                // face measure orthogonal to each axis the cell touches
                double fx = dim == 3 ? g.h[1] * g.h[2] : g.h[1];
                double fy = dim == 3 ? g.h[0] * g.h[2] : g.h[0];
                double fz = g.h[0] * g.h[1];
                if (i == 0) w += fx;
                if (i == g.n[0] - 1) w += fx;
                if (j == 0) w += fy;
                if (j == g.n[1] - 1) w += fy;
                if (dim == 3) {
                    if (k == 0) w += fz;
                    if (k == g.n[2] - 1) w += fz;
                }
                auto id = g.index(i, j, k);
                g.trace_w[static_cast<size_t>(id)] = w;
                if (w > 0) g.boundary_nodes.push_back(id);
            }
    return g;
}

double Grid::diameter() const {
    double s = L[0] * L[0] + L[1] * L[1];
    if (dim == 3) s += L[2] * L[2];
    return std::sqrt(s);
}

const char* unit_name(Unit u) {
    switch (u) {
        case Unit::Temperature: return "temperature";
        case Unit::OrderParameter: return "order-parameter";
        case Unit::Potential: return "potential";
        default: return "generic";
    }
}

Unit unit_from_name(const std::string& s) {
    if (s == "temperature") return Unit::Temperature;
    if (s == "order-parameter") return Unit::OrderParameter;
    if (s == "potential") return Unit::Potential;
    if (s == "generic") return Unit::Generic;
    throw std::runtime_error("unknown field unit: " + s);
}

Field make_field(const Grid& g, Unit u) {
    Field f;
    f.g = &g;
    f.unit = u;
    f.v.assign(static_cast<size_t>(g.nn), 0.0);
    return f;
}

Field make_field(const Grid& g, Unit u, std::vector<double> values) {
    if (static_cast<std::int64_t>(values.size()) != g.nn)
        throw std::runtime_error("field size does not match grid");
    if (!all_finite(values))
        throw std::runtime_error("field contains non-finite values");
    Field f;
    f.g = &g;
    f.unit = u;
    f.v = std::move(values);
    return f;
}

bool all_finite(const std::vector<double>& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

double dot_h(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return g.cellvol * s;
}

double dot_h(const Field& a, const Field& b) { return dot_h(*a.g, a.v, b.v); }

double norm_h(const Grid& g, const std::vector<double>& a) {
    return std::sqrt(dot_h(g, a, a));
}

double norm_h(const Field& a) { return norm_h(*a.g, a.v); }

double mean_value(const Grid& g, const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x;
    return s * g.cellvol / g.omega;
}

double mean_value(const Field& a) { return mean_value(*a.g, a.v); }

double trace_norm_sq(const Grid& g, const std::vector<double>& a) {
    double s = 0.0;
    for (auto id : g.boundary_nodes) {
        auto i = static_cast<size_t>(id);
        s += g.trace_w[i] * a[i] * a[i];
    }
    return s;
}

} // namespace scpf
