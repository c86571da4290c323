#pragma once

#include <memory>
#include <vector>

#include "scpf/config.hpp"
#include "scpf/expressions.hpp"
#include "scpf/graphs.hpp"
#include "scpf/grid.hpp"
#include "scpf/nonlocal.hpp"
#include "scpf/stencil.hpp"

namespace scpf {

// The interaction term of the chemical potential: either the assembled
// kernel operator or, in local mode, minus the Neumann Laplacian.
struct InteractionOp {
    const Grid* g = nullptr;
    const NonlocalOperator* nl = nullptr; // null in local mode
    bool local = false;

    void apply(const double* x, double* y) const;
    std::vector<double> apply(const std::vector<double>& x) const;
    double energy_slot(const std::vector<double>& phi) const; // E_eps or half the Dirichlet energy
    std::vector<double> diagonal() const;
    void add_dense(std::vector<double>& m) const; // += operator matrix, row-major nn x nn
};

struct StepStats {
    int newton_iters = 0;
    int cg_iters = 0;
    bool split_step = false; // step had to be retried as two half steps
};

// Implicit Euler update of the conserved phase equation at fixed
// temperature. Unknowns (phi, mu) solve
//   (phi - phi_old)/tau = lap mu
//   mu = (phi - phi_old)/tau - lambda lap phi + B phi + yosida(phi) + pi(phi) - theta.
// Small systems go through one dense LU per Newton iteration; larger ones
// eliminate mu and run CG on the mean-zero Schur complement.
class PhiStepper {
public:
    PhiStepper(const Grid& g, const InteractionOp& B, const MonotoneGraph& graph,
               const PiSpec& pi, double lambda, double tau, const Tolerances& tol,
               std::int64_t direct_cap = 320);
    ~PhiStepper();

    // theta is the temperature slice the step couples against; phi/mu are
    // in-out (entry values seed the Newton iteration).
    void step(const std::vector<double>& phi_old, const std::vector<double>& theta,
              std::vector<double>& phi, std::vector<double>& mu, StepStats& st, int step_index);

    double tau() const { return tau_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double tau_;
};

// Implicit Euler update of the singular heat equation at fixed phase
// increment. Solves, per node,
//   cellvol [ (Ln(theta) - u_old)/tau + dphi/tau - lap theta - f ] + trace_w (theta - theta_gamma) = 0
// by damped Newton with an SPD CG inner solve, then checks positivity.
class ThetaStepper {
public:
    ThetaStepper(const Grid& g, double lambda, double tau, const Tolerances& tol);

    void step(const std::vector<double>& u_old, const std::vector<double>& dphi,
              const std::vector<double>& f, const std::vector<double>& theta_gamma,
              std::vector<double>& theta, StepStats& st, int step_index) const;

    std::vector<double> transform(const std::vector<double>& theta) const; // Ln nodewise
    double lam() const { return lam_; }

private:
    const Grid* g_;
    double lam_;
    double tau_;
    Tolerances tol_;
    std::vector<double> neg_lap_diag_;
};

} // namespace scpf
