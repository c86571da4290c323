#pragma once

#include <vector>

#include "scpf/grid.hpp"

namespace scpf {

// Closed expression vocabulary for run data: a constant plus cosine
// products with optional linear time ramps,
//   c0 + sum_m amp * cos(kx pi x / Lx) * cos(ky pi y / Ly) [* cos(kz pi z / Lz)] * (1 + ramp * t).
// Cosine modes respect the no-flux walls and have zero spatial mean
// whenever any wavenumber is positive, which keeps mean bookkeeping easy.
struct ExprTerm {
    double amp = 0.0;
    int kx = 0, ky = 0, kz = 0;
    double ramp = 0.0;
};

struct Expr {
    double c0 = 0.0;
    std::vector<ExprTerm> terms;

    bool is_constant() const { return terms.empty(); }
    bool all_finite_coeffs() const;
    double eval(const Grid& g, double x, double y, double z, double t) const;
    void sample(const Grid& g, double t, std::vector<double>& out) const;
    std::vector<double> sample(const Grid& g, double t) const;
    // conservative range bound: |terms| summed with |amp|(1+|ramp| T)
    void bound(double T, double& lo, double& hi) const;
    double mean(const Grid& g) const; // exact spatial mean at t=0 (ramps scale terms only)
};

// Lipschitz perturbation of the potential: slope * r plus an optional
// monomial term coef * r^deg. Degrees above 1 break the Lipschitz
// requirement and are rejected at config validation.
struct PiSpec {
    double slope = -1.0;
    double coef = 0.0;
    int deg = 1;

    double eval(double r) const;
    double prime(double r) const;
    double antiderivative(double r) const; // vanishes at 0
    double lipschitz() const;              // only valid when deg <= 1
};

} // namespace scpf
