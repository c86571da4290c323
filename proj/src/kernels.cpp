#include "scpf/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace scpf {

double cd_constant(int dim) {
    const double pi = 3.14159265358979323846;
    switch (dim) {
        case 1: return 1.0;
        case 2: return 2.0 / pi;
        case 3: return 3.0 / (2.0 * pi);
        default: throw std::runtime_error("cd_constant: dim must be 1, 2 or 3");
    }
}

double sphere_measure(int dim) {
    const double pi = 3.14159265358979323846;
    switch (dim) {
        case 1: return 2.0;          // two points
        case 2: return 2.0 * pi;
        case 3: return 4.0 * pi;
        default: throw std::runtime_error("sphere_measure: dim must be 1, 2 or 3");
    }
}

const char* kernel_name(KernelId k) {
    switch (k) {
        case KernelId::Indicator: return "indicator";
        case KernelId::Polynomial: return "polynomial";
        default: return "gaussian";
    }
}

KernelId kernel_from_name(const std::string& s) {
    if (s == "indicator") return KernelId::Indicator;
    if (s == "polynomial") return KernelId::Polynomial;
    if (s == "gaussian") return KernelId::Gaussian;
    throw std::runtime_error("unknown kernel family: " + s);
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1], computed once by Newton on the
// Legendre recurrence. 64 points is plenty for these smooth profiles.
struct Gl64 {
    std::vector<double> x, w;
    Gl64() {
        const int n = 64;
        x.resize(n);
        w.resize(n);
        const double pi = 3.14159265358979323846;
        for (int i = 0; i < n / 2; ++i) {
            double t = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (t * p1 - p0) / (t * t - 1.0);
                double dt = p1 / dp;
                t -= dt;
                if (std::abs(dt) < 1e-15) break;
            }
            x[i] = -t;
            x[n - 1 - i] = t;
            double ww = 2.0 / ((1.0 - t * t) * dp * dp);
            w[i] = ww;
            w[n - 1 - i] = ww;
        }
    }
};

const Gl64& gl64() {
    static Gl64 tab;
    return tab;
}

const double kGaussSigma = 1.0 / 3.0;

} // namespace

double gauss_legendre_64(double a, double b, const std::function<double(double)>& f) {
    const auto& t = gl64();
    double c = 0.5 * (b - a), m = 0.5 * (a + b);
    double s = 0.0;
    for (size_t i = 0; i < t.x.size(); ++i) s += t.w[i] * f(m + c * t.x[i]);
    return c * s;
}

KernelFamily KernelFamily::make(KernelId id, int dim, double profile_scale) {
    KernelFamily f;
    f.id = id;
    f.dim = dim;
    f.profile_scale = profile_scale;
    double cd = cd_constant(dim);
    switch (id) {
        case KernelId::Indicator:
            f.amplitude = dim * cd;
            break;
        case KernelId::Polynomial:
            f.amplitude = dim * (dim + 1) * cd;
            break;
        case KernelId::Gaussian: {
            double I = gauss_legendre_64(0.0, 1.0, [dim](double s) {
                return std::exp(-s * s / (2.0 * kGaussSigma * kGaussSigma)) *
                       std::pow(s, dim - 1);
            });
            f.amplitude = cd / I;
            break;
        }
    }
    return f;
}

double KernelFamily::rho(double s) const {
    if (s < 0.0 || s > 1.0) return 0.0;
    double base;
    switch (id) {
        case KernelId::Indicator: base = 1.0; break;
        case KernelId::Polynomial: base = 1.0 - s; break;
        default: base = std::exp(-s * s / (2.0 * kGaussSigma * kGaussSigma)); break;
    }
    return profile_scale * amplitude * base;
}

double KernelFamily::rho_eps(double eps, double r) const {
    return std::pow(eps, -dim) * rho(r / eps);
}

double KernelFamily::k_eps(double eps, double r) const {
    return rho_eps(eps, r) / (r * r);
}

double KernelFamily::radial_moment() const {
    return gauss_legendre_64(0.0, 1.0, [this](double s) {
        return rho(s) * std::pow(s, dim - 1);
    });
}

bool KernelFamily::normalization_ok(double rtol) const {
    double cd = cd_constant(dim);
    return std::abs(radial_moment() - cd) <= rtol * cd;
}

double KernelFamily::tail_mass(double eps, double delta) const {
    // substitute s = eps * u; the eps powers cancel against the profile scaling
    double lo = delta / eps;
    if (lo >= 1.0) return 0.0;
    if (lo < 0.0) lo = 0.0;
    return gauss_legendre_64(lo, 1.0, [this](double u) {
        return rho(u) * std::pow(u, dim - 1);
    });
}

double KernelFamily::lattice_moment(const std::array<double, 3>& h, double eps) const {
    const double cut = eps * (1.0 + 1e-12);
    const int mx = static_cast<int>(std::floor(cut / h[0]));
    const int my = static_cast<int>(std::floor(cut / h[1]));
    const int mz = dim == 3 ? static_cast<int>(std::floor(cut / h[2])) : 0;
    const double vol = dim == 3 ? h[0] * h[1] * h[2] : h[0] * h[1];
    double s = 0.0;
    for (int kz = -mz; kz <= mz; ++kz)
        for (int ky = -my; ky <= my; ++ky)
            for (int kx = -mx; kx <= mx; ++kx) {
                if (kx == 0 && ky == 0 && kz == 0) continue;
                double zx = kx * h[0], zy = ky * h[1];
                double r2 = zx * zx + zy * zy;
                if (dim == 3) {
                    double zz = kz * h[2];
                    r2 += zz * zz;
                }
                double r = std::sqrt(r2);
                if (r > cut) continue;
                s += vol * rho_eps(eps, r);
            }
    return s;
}

double KernelFamily::moment_target() const {
    return sphere_measure(dim) * cd_constant(dim);
}

double KernelFamily::quadrature_correction(const std::array<double, 3>& h, double eps) const {
    double lm = lattice_moment(h, eps);
    if (!(lm > 0.0))
        throw std::runtime_error("kernel support holds no lattice offsets; epsilon too small for this grid");
    return moment_target() / lm;
}

} // namespace scpf
