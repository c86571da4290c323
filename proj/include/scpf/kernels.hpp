#pragma once

#include <array>
#include <functional>
#include <string>

namespace scpf {

// Radial constant that makes the interaction operator limit to minus the
// plain Laplacian: 2 divided by the sphere average of |e1.sigma|^2 times
// the sphere measure. Closed forms per dimension.
double cd_constant(int dim);

// Surface measure of the unit sphere in R^d.
double sphere_measure(int dim);

enum class KernelId { Indicator, Polynomial, Gaussian };

const char* kernel_name(KernelId k);
KernelId kernel_from_name(const std::string& s);

// A compactly supported radial profile rho on [0,1], calibrated so that
// the radial moment int_0^1 rho(s) s^{d-1} ds equals cd_constant(dim).
// profile_scale multiplies the profile; anything but 1 breaks the
// calibration and is how a config can violate the kernel assumption.
struct KernelFamily {
    KernelId id = KernelId::Polynomial;
    int dim = 2;
    double profile_scale = 1.0;
    double amplitude = 0.0; // calibrated prefactor, before profile_scale

    static KernelFamily make(KernelId id, int dim, double profile_scale = 1.0);

    double rho(double s) const;                    // profile, zero outside [0,1]
    double rho_eps(double eps, double r) const;    // eps^{-d} rho(r/eps)
    double k_eps(double eps, double r) const;      // rho_eps(r) / r^2
    double radial_moment() const;                  // numeric, for the self test
    bool normalization_ok(double rtol = 1e-8) const;
    double tail_mass(double eps, double delta) const; // int_delta^inf rho_eps s^{d-1} ds

    // Sum of cellvol * rho_eps(|z|) over nonzero offsets of the infinite
    // cell lattice within the support. Discrete counterpart of the full
    // moment integral |S^{d-1}| * c_d; depends only on cell shape and eps.
    double lattice_moment(const std::array<double, 3>& h, double eps) const;
    double moment_target() const;                  // |S^{d-1}| * c_d
    // Quadrature calibration factor applied to every weight so the
    // discrete second moment matches the continuum one exactly.
    double quadrature_correction(const std::array<double, 3>& h, double eps) const;
};

// 64 point Gauss-Legendre on [a,b]; used for the profile moments.
double gauss_legendre_64(double a, double b, const std::function<double(double)>& f);

} // namespace scpf
