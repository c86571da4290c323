#include "scpf/expressions.hpp"

#include <cmath>

namespace scpf {

namespace {
const double kPi = 3.14159265358979323846;
}

bool Expr::all_finite_coeffs() const {
    if (!std::isfinite(c0)) return false;
    for (const auto& t : terms)
        if (!std::isfinite(t.amp) || !std::isfinite(t.ramp)) return false;
    return true;
}

double Expr::eval(const Grid& g, double x, double y, double z, double t) const {
    double s = c0;
    for (const auto& tm : terms) {
        double v = tm.amp;
        if (tm.kx) v *= std::cos(tm.kx * kPi * x / g.L[0]);
        if (tm.ky) v *= std::cos(tm.ky * kPi * y / g.L[1]);
        if (tm.kz && g.dim == 3) v *= std::cos(tm.kz * kPi * z / g.L[2]);
        s += v * (1.0 + tm.ramp * t);
    }
    return s;
}

void Expr::sample(const Grid& g, double t, std::vector<double>& out) const {
    out.resize(static_cast<size_t>(g.nn));
    for (std::int64_t id = 0; id < g.nn; ++id) {
        double x, y, z;
        g.coords(id, x, y, z);
        out[static_cast<size_t>(id)] = eval(g, x, y, z, t);
    }
}

std::vector<double> Expr::sample(const Grid& g, double t) const {
    std::vector<double> out;
    sample(g, t, out);
    return out;
}

void Expr::bound(double T, double& lo, double& hi) const {
    double spread = 0.0;
    for (const auto& tm : terms)
        spread += std::abs(tm.amp) * (1.0 + std::abs(tm.ramp) * T);
    lo = c0 - spread;
    hi = c0 + spread;
}

double Expr::mean(const Grid& g) const {
    // pure cosine modes integrate to zero over the box whenever any
    // wavenumber is nonzero; a term with all-zero wavenumbers is a constant
    double m = c0;
    for (const auto& tm : terms) {
        bool constant = tm.kx == 0 && tm.ky == 0 && (g.dim == 2 || tm.kz == 0);
        if (constant) m += tm.amp;
    }
    return m;
}

double PiSpec::eval(double r) const {
    double s = slope * r;
    if (coef != 0.0) s += coef * std::pow(r, deg);
    return s;
}

double PiSpec::prime(double r) const {
    double s = slope;
    if (coef != 0.0) s += coef * deg * std::pow(r, deg - 1);
    return s;
}

double PiSpec::antiderivative(double r) const {
    double s = 0.5 * slope * r * r;
    if (coef != 0.0) s += coef * std::pow(r, deg + 1) / (deg + 1);
    return s;
}

double PiSpec::lipschitz() const {
    // a deg-0 term is a constant shift and adds no slope
    double s = std::abs(slope);
    if (coef != 0.0 && deg == 1) s += std::abs(coef);
    return s;
}

} // namespace scpf
