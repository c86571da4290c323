#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace scpf {

// Cell-centered tensor grid on a box, 2d or 3d. Nodes sit at cell centers
// x_i = (i + 1/2) h. All integrals are midpoint sums with weight cellvol.
struct Grid {
    int dim = 2;
    std::array<int, 3> n{1, 1, 1};      // nodes per axis, n[2] == 1 in 2d
    std::array<double, 3> L{1.0, 1.0, 0.0};
    std::array<double, 3> h{0.0, 0.0, 0.0};
    std::int64_t nn = 0;                 // total node count
    double cellvol = 0.0;
    double omega = 0.0;                  // |domain|
    double gamma_area = 0.0;             // |boundary|, exact for the box

    // Per-node boundary quadrature weight: sum of exposed face measures.
    // Zero for interior cells, corner cells pick up several faces.
    std::vector<double> trace_w;
    std::vector<std::int64_t> boundary_nodes;

    std::int64_t index(int i, int j, int k = 0) const {
        return i + static_cast<std::int64_t>(n[0]) * (j + static_cast<std::int64_t>(n[1]) * k);
    }
    void decode(std::int64_t id, int& i, int& j, int& k) const {
        i = static_cast<int>(id % n[0]);
        std::int64_t r = id / n[0];
        j = static_cast<int>(r % n[1]);
        k = static_cast<int>(r / n[1]);
    }
    void coords(std::int64_t id, double& x, double& y, double& z) const {
        int i, j, k;
        decode(id, i, j, k);
        x = (i + 0.5) * h[0];
        y = (j + 0.5) * h[1];
        z = dim == 3 ? (k + 0.5) * h[2] : 0.0;
    }
    double diameter() const;
    double max_h() const { return dim == 3 ? std::max(h[0], std::max(h[1], h[2])) : std::max(h[0], h[1]); }
};

Grid make_grid(int dim, int nx, int ny, int nz, double Lx, double Ly, double Lz);

// Unit tag for fields; purely bookkeeping but keeps snapshot headers honest.
enum class Unit { Temperature, OrderParameter, Potential, Generic };

const char* unit_name(Unit u);
Unit unit_from_name(const std::string& s);

// A scalar field over a grid. Values are stored node-ordered (x fastest).
struct Field {
    const Grid* g = nullptr;
    Unit unit = Unit::Generic;
    std::vector<double> v;
};

Field make_field(const Grid& g, Unit u = Unit::Generic);
Field make_field(const Grid& g, Unit u, std::vector<double> values); // rejects non-finite entries

double dot_h(const Field& a, const Field& b);
double dot_h(const Grid& g, const std::vector<double>& a, const std::vector<double>& b);
double norm_h(const Field& a);
double norm_h(const Grid& g, const std::vector<double>& a);
double mean_value(const Field& a);
double mean_value(const Grid& g, const std::vector<double>& a);
double trace_norm_sq(const Grid& g, const std::vector<double>& a); // sum over boundary of trace_w * a^2
bool all_finite(const std::vector<double>& a);

} // namespace scpf
