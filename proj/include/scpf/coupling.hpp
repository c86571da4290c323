#pragma once

#include <optional>
#include <vector>

#include "scpf/config.hpp"
#include "scpf/state.hpp"
#include "scpf/subproblems.hpp"

namespace scpf {

struct PicardInfo {
    int iters = 0;
    double tol_abs = 0.0;
    double final_dist = 0.0;            // weighted squared trajectory metric
    double final_dist_unweighted = 0.0; // same sum without the exponential weight
    std::vector<double> dists;
    std::vector<double> ratios;
};

struct RunStats {
    PicardInfo picard;
    bool per_step = false;
    int total_newton_phi = 0;
    int total_newton_theta = 0;
    long total_cg = 0;
    int split_steps = 0;
    int max_inner_sweeps = 0;
    double max_mean_drift = 0.0;
    double min_theta = 0.0;
    double final_balance_residual = 0.0;
};

struct RunResult {
    Trajectory traj;
    RunStats stats;
};

// Time-discrete coupled solver for one configuration. Owns the grid, the
// interaction operator and the data samples; exposes the two half maps
// (phase sweep at frozen temperature, temperature sweep at frozen phase)
// so the fixed-point structure can be probed directly.
class CoupledSolver {
public:
    using Traj = std::vector<std::vector<double>>; // slices 0..N

    explicit CoupledSolver(const RunConfig& cfg);

    const Grid& grid() const { return g_; }
    const RunConfig& config() const { return cfg_; }
    const InteractionOp& interaction() const { return B_; }
    const MonotoneGraph& graph() const { return graph_; }
    int steps() const { return N_; }
    double tau() const { return tau_; }

    const std::vector<double>& phi_init() const { return phi0_; }
    const std::vector<double>& theta_init() const { return theta0_; }

    // phase sweep: solves the phi equation against the given temperature
    // trajectory; returns phi slices and optionally the potentials
    Traj apply_phase(const Traj& theta, Traj* mu_out = nullptr, RunStats* stats = nullptr);
    // temperature sweep against a given phase trajectory
    Traj apply_temperature(const Traj& phi, RunStats* stats = nullptr);
    Traj apply_composed(const Traj& theta, RunStats* stats = nullptr);

    // exp-weighted squared trajectory distance driving the fixed point
    double traj_metric(const Traj& a, const Traj& b) const;
    double traj_metric_unweighted(const Traj& a, const Traj& b) const;
    double metric_weight_rate() const; // L = 2 lip(pi) + 3/lambda

    RunResult run();
    RunResult run_global_picard();
    RunResult run_per_step();

    // diagnostics over a finished trajectory; also refreshes the stats
    // invariant fields (mean drift, min theta, final balance residual)
    void fill_ledger(Trajectory& traj, RunStats& stats) const;

    std::vector<double> yosida_field(const std::vector<double>& phi) const;
    std::vector<double> transform_field(const std::vector<double>& theta) const;
    double total_energy(const std::vector<double>& phi) const;

private:
    RunConfig cfg_;
    Grid g_;
    MonotoneGraph graph_;
    KernelFamily fam_;
    std::optional<NonlocalOperator> nl_;
    InteractionOp B_;
    double tau_;
    int N_;
    std::vector<double> phi0_, theta0_, u0_;
    std::vector<std::vector<double>> f_n_, thgam_n_;
    std::optional<PhiStepper> phi_step_;
    std::optional<ThetaStepper> theta_step_;

    std::vector<double> initial_mu(const std::vector<double>& theta) const;
    Trajectory assemble_trajectory(const Traj& theta, const Traj& phi, const Traj& mu) const;
};

// Resolves the staged initial phase datum for a config (sampling plus the
// optional mollification pass); exposed for tests.
std::vector<double> staged_phi0(const RunConfig& cfg, const Grid& g);

} // namespace scpf
