#pragma once

#include <functional>
#include <vector>

#include "scpf/grid.hpp"

namespace scpf {

// Five/seven point Laplacian with homogeneous Neumann walls: missing
// neighbors are simply skipped, which is the reflection ghost cell in
// disguise. Symmetric w.r.t. the midpoint inner product, rows and columns
// sum to zero, so constants are annihilated and means are conserved.
void laplacian_neumann(const Grid& g, const double* x, double* y);
std::vector<double> laplacian_neumann(const Grid& g, const std::vector<double>& x);

// Edge-based sum of squared differences scaled like (grad u, grad u)_h.
// Equals (u, -lap u)_h exactly in exact arithmetic but is nonnegative
// term by term, which the energy ledger relies on.
double dirichlet_energy(const Grid& g, const std::vector<double>& u);

struct CgResult {
    int iters = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

using LinOp = std::function<void(const double*, double*)>;

// Plain conjugate gradients with optional Jacobi preconditioner
// (pass the diagonal, entries must be positive). Serial accumulations,
// so results do not depend on thread count. A full preconditioner
// operator wins over the diagonal when both are given; it must be SPD
// on the subspace the iteration lives in.
CgResult cg_solve(std::int64_t n, const LinOp& A, const double* b, double* x,
                  double rtol, int maxit, const std::vector<double>* jacobi_diag,
                  const LinOp* precond = nullptr);

// Zero-mean inverse Laplacian: solves -lap u = v, mean(u) = 0.
// Rejects inputs whose mean exceeds 1e-10 * ||v||_h.
struct InvNeumann {
    const Grid* g;
    double rtol = 1e-10;
    int maxit = 20000;
    std::vector<double> diag; // of -lap, for preconditioning
    explicit InvNeumann(const Grid& grid);
    std::vector<double> apply(const std::vector<double>& v, CgResult* stats = nullptr) const;
};

// Inverse of (-lap + id), the Riesz map of the H^1 inner product.
struct RieszInverse {
    const Grid* g;
    double rtol = 1e-10;
    int maxit = 20000;
    std::vector<double> diag;
    explicit RieszInverse(const Grid& grid);
    std::vector<double> apply(const std::vector<double>& v, CgResult* stats = nullptr) const;
};

// Robin operator for the temperature flux: w -> cellvol*(-lap w) + trace_w.*w.
// SPD; solve() runs preconditioned CG.
struct RobinSystem {
    const Grid* g;
    double rtol = 1e-10;
    int maxit = 20000;
    std::vector<double> diag;
    explicit RobinSystem(const Grid& grid);
    void apply(const double* w, double* out) const;
    std::vector<double> solve(const std::vector<double>& rhs, CgResult* stats = nullptr) const;
    // Stationary -lap theta = f with flux condition against theta_gamma.
    std::vector<double> solve_stationary(const std::vector<double>& f,
                                         const std::vector<double>& theta_gamma,
                                         CgResult* stats = nullptr) const;
};

// Diagonal of -laplacian_neumann, used by several preconditioners.
std::vector<double> neg_laplacian_diagonal(const Grid& g);

// Negative-norm diagnostics built on the inverse operators above.
double norm_vstar0_sq(const Grid& g, const InvNeumann& inv, const std::vector<double>& v);
double norm_vstar_sq(const Grid& g, const RieszInverse& inv, const std::vector<double>& v);

} // namespace scpf
