#pragma once

#include <vector>

#include "scpf/grid.hpp"

namespace scpf {

// One time slice of the coupled system. xi stores the regularized graph
// value at phi, u the transformed temperature entering the enthalpy.
struct SystemState {
    double t = 0.0;
    std::vector<double> theta, phi, mu, xi, u;
};

// Per-step diagnostics; the balance column accumulates the discrete
// energy identity defect up to that step.
struct LedgerRow {
    int step = 0;
    double t = 0.0;
    double grad_mu_sq = 0.0;     // ||grad mu||^2 at the step
    double phi_t_sq = 0.0;       // ||(phi^n - phi^{n-1})/tau||^2
    double energy_grad = 0.0;    // lambda/2 ||grad phi||^2
    double energy_interaction = 0.0;
    double energy_pot = 0.0;     // integral of moreau + pi antiderivative
    double energy_total = 0.0;
    double theta_l2 = 0.0;
    double min_theta = 0.0;
    double mean_phi = 0.0;
    double xi_l2 = 0.0;
    double mu_l2 = 0.0;
    double balance_residual = 0.0;
};

struct Trajectory {
    double tau = 0.0;
    std::vector<SystemState> states; // index 0 holds the initial data
    std::vector<LedgerRow> ledger;   // rows 0..N, row 0 has zero rates
};

} // namespace scpf
