#include "scpf/stencil.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "scpf/errors.hpp"

namespace scpf {

void laplacian_neumann(const Grid& g, const double* x, double* y) {
    const int nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const double ax = 1.0 / (g.h[0] * g.h[0]);
    const double ay = 1.0 / (g.h[1] * g.h[1]);
    const double az = g.dim == 3 ? 1.0 / (g.h[2] * g.h[2]) : 0.0;
    const std::int64_t sx = 1, sy = nx, sz = static_cast<std::int64_t>(nx) * ny;

#pragma omp parallel for collapse(2) schedule(static)
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j) {
            std::int64_t base = j * sy + k * sz;
            for (int i = 0; i < nx; ++i) {
                std::int64_t id = base + i;
                double c = x[id];
                double acc = 0.0;
                if (i > 0) acc += ax * (x[id - sx] - c);
                if (i < nx - 1) acc += ax * (x[id + sx] - c);
                if (j > 0) acc += ay * (x[id - sy] - c);
                if (j < ny - 1) acc += ay * (x[id + sy] - c);
                if (g.dim == 3) {
                    if (k > 0) acc += az * (x[id - sz] - c);
                    if (k < nz - 1) acc += az * (x[id + sz] - c);
                }
                y[id] = acc;
            }
        }
}

std::vector<double> laplacian_neumann(const Grid& g, const std::vector<double>& x) {
    std::vector<double> y(x.size());
    laplacian_neumann(g, x.data(), y.data());
    return y;
}

double dirichlet_energy(const Grid& g, const std::vector<double>& u) {
    const int nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const double cx = g.cellvol / (g.h[0] * g.h[0]);
    const double cy = g.cellvol / (g.h[1] * g.h[1]);
    const double cz = g.dim == 3 ? g.cellvol / (g.h[2] * g.h[2]) : 0.0;
    const std::int64_t sy = nx, sz = static_cast<std::int64_t>(nx) * ny;
    double s = 0.0;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j) {
            std::int64_t base = j * sy + k * sz;
            for (int i = 0; i < nx; ++i) {
                std::int64_t id = base + i;
                double c = u[id];
                if (i < nx - 1) { double d = u[id + 1] - c; s += cx * d * d; }
                if (j < ny - 1) { double d = u[id + sy] - c; s += cy * d * d; }
                if (g.dim == 3 && k < nz - 1) { double d = u[id + sz] - c; s += cz * d * d; }
            }
        }
    return s;
}

std::vector<double> neg_laplacian_diagonal(const Grid& g) {
    const int nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const double ax = 1.0 / (g.h[0] * g.h[0]);
    const double ay = 1.0 / (g.h[1] * g.h[1]);
    const double az = g.dim == 3 ? 1.0 / (g.h[2] * g.h[2]) : 0.0;
    std::vector<double> d(static_cast<size_t>(g.nn), 0.0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double acc = 0.0;
                if (i > 0) acc += ax;
                if (i < nx - 1) acc += ax;
                if (j > 0) acc += ay;
                if (j < ny - 1) acc += ay;
                if (g.dim == 3) {
                    if (k > 0) acc += az;
                    if (k < nz - 1) acc += az;
                }
                d[g.index(i, j, k)] = acc;
            }
    return d;
}

CgResult cg_solve(std::int64_t n, const LinOp& A, const double* b, double* x,
                  double rtol, int maxit, const std::vector<double>* jacobi_diag,
                  const LinOp* precond_op) {
    const size_t nn = static_cast<size_t>(n);
    std::vector<double> r(nn), z(nn), p(nn), Ap(nn);

    A(x, Ap.data());
    double bnorm2 = 0.0;
    for (size_t i = 0; i < nn; ++i) {
        r[i] = b[i] - Ap[i];
        bnorm2 += b[i] * b[i];
    }
    double bnorm = std::sqrt(bnorm2);
    if (bnorm == 0.0) bnorm = 1.0;

    auto precond = [&](const std::vector<double>& rr, std::vector<double>& zz) {
        if (precond_op) {
            (*precond_op)(rr.data(), zz.data());
        } else if (jacobi_diag) {
            const auto& d = *jacobi_diag;
            for (size_t i = 0; i < nn; ++i) zz[i] = rr[i] / d[i];
        } else {
            zz = rr;
        }
    };

    precond(r, z);
    p = z;
    double rz = 0.0, rnorm2 = 0.0;
    for (size_t i = 0; i < nn; ++i) { rz += r[i] * z[i]; rnorm2 += r[i] * r[i]; }

    CgResult res;
    res.rel_residual = std::sqrt(rnorm2) / bnorm;
    if (res.rel_residual <= rtol) { res.converged = true; return res; }

    for (int it = 0; it < maxit; ++it) {
        A(p.data(), Ap.data());
        double pAp = 0.0;
        for (size_t i = 0; i < nn; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0)
            throw NumericsError("cg: operator lost positive definiteness");
        double alpha = rz / pAp;
        rnorm2 = 0.0;
        for (size_t i = 0; i < nn; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
            rnorm2 += r[i] * r[i];
        }
        res.iters = it + 1;
        res.rel_residual = std::sqrt(rnorm2) / bnorm;
        if (res.rel_residual <= rtol) { res.converged = true; return res; }
        precond(r, z);
        double rz_new = 0.0;
        for (size_t i = 0; i < nn; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < nn; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

InvNeumann::InvNeumann(const Grid& grid) : g(&grid), diag(neg_laplacian_diagonal(grid)) {}

std::vector<double> InvNeumann::apply(const std::vector<double>& v, CgResult* stats) const {
    double m = mean_value(*g, v);
    double nv = norm_h(*g, v);
    if (std::abs(m) > 1e-10 * std::max(nv, 1e-300))
        throw NumericsError("zero-mean inverse applied to a field with nonzero mean");
    if (nv == 0.0) return std::vector<double>(v.size(), 0.0);

    // clean the roundoff-level mean so CG stays on the mean-zero subspace
    std::vector<double> b = v;
    for (auto& x : b) x -= m;

    const Grid& gr = *g;
    LinOp A = [&gr](const double* in, double* out) {
        laplacian_neumann(gr, in, out);
        for (std::int64_t i = 0; i < gr.nn; ++i) out[i] = -out[i];
    };
    std::vector<double> x(v.size(), 0.0);
    auto r = cg_solve(gr.nn, A, b.data(), x.data(), rtol, maxit, &diag);
    if (!r.converged)
        throw NumericsError("zero-mean inverse: cg did not converge");
    if (stats) *stats = r;
    double mx = mean_value(gr, x);
    for (auto& e : x) e -= mx;
    return x;
}

RieszInverse::RieszInverse(const Grid& grid) : g(&grid), diag(neg_laplacian_diagonal(grid)) {
    for (auto& d : diag) d += 1.0;
}

std::vector<double> RieszInverse::apply(const std::vector<double>& v, CgResult* stats) const {
    const Grid& gr = *g;
    LinOp A = [&gr](const double* in, double* out) {
        laplacian_neumann(gr, in, out);
        for (std::int64_t i = 0; i < gr.nn; ++i) out[i] = in[i] - out[i];
    };
    std::vector<double> x(v.size(), 0.0);
    auto r = cg_solve(gr.nn, A, v.data(), x.data(), rtol, maxit, &diag);
    if (!r.converged)
        throw NumericsError("riesz inverse: cg did not converge");
    if (stats) *stats = r;
    return x;
}

RobinSystem::RobinSystem(const Grid& grid) : g(&grid), diag(neg_laplacian_diagonal(grid)) {
    for (auto& d : diag) d *= grid.cellvol;
    for (size_t i = 0; i < diag.size(); ++i) diag[i] += grid.trace_w[i];
}

void RobinSystem::apply(const double* w, double* out) const {
    laplacian_neumann(*g, w, out);
    const double cv = g->cellvol;
    for (std::int64_t i = 0; i < g->nn; ++i)
        out[i] = -cv * out[i] + g->trace_w[static_cast<size_t>(i)] * w[i];
}

std::vector<double> RobinSystem::solve(const std::vector<double>& rhs, CgResult* stats) const {
    LinOp A = [this](const double* in, double* out) { apply(in, out); };
    std::vector<double> x(rhs.size(), 0.0);
    auto r = cg_solve(g->nn, A, rhs.data(), x.data(), rtol, maxit, &diag);
    if (!r.converged)
        throw NumericsError("robin solve: cg did not converge");
    if (stats) *stats = r;
    return x;
}

std::vector<double> RobinSystem::solve_stationary(const std::vector<double>& f,
                                                  const std::vector<double>& theta_gamma,
                                                  CgResult* stats) const {
    std::vector<double> rhs(f.size());
    const double cv = g->cellvol;
    for (std::int64_t i = 0; i < g->nn; ++i) {
        auto ii = static_cast<size_t>(i);
        rhs[ii] = cv * f[ii] + g->trace_w[ii] * theta_gamma[ii];
    }
    return solve(rhs, stats);
}

double norm_vstar0_sq(const Grid& g, const InvNeumann& inv, const std::vector<double>& v) {
    auto u = inv.apply(v);
    return dot_h(g, v, u);
}

double norm_vstar_sq(const Grid& g, const RieszInverse& inv, const std::vector<double>& v) {
    auto u = inv.apply(v);
    return dot_h(g, v, u);
}

} // namespace scpf
