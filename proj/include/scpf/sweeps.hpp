#pragma once

#include <string>
#include <vector>

#include "scpf/config.hpp"
#include "scpf/coupling.hpp"

namespace scpf {

// One named diagnostic from the operator battery. value is the headline
// measured number (a residual, an extreme eigenvalue, a spread...), detail
// carries whatever context makes a failure actionable.
struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct OperatorReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
};

// Battery of structural checks on the assembled operators: kernel
// calibration, symmetry/PSD of the interaction form, variational identity
// of the energy, monotone pairing sign, locality limits on smooth probes,
// compactness and embedding constants, and the boundary/inverse operators.
// Deterministic; seeds its probe draws from cfg.seed.
OperatorReport check_operator_lemmas(const RunConfig& cfg);

struct LambdaRung {
    double lambda = 0.0;
    double delta = 0.0;          // max_n distance to the next rung, 0 on the last
    double ratio = 0.0;          // delta_k / delta_{k-1}
    bool floored = false;        // delta was below the noise floor and got clamped
    double ln_distance = 0.0;    // max_n of the regularized-vs-sharp log gap
    double graph_distance = 0.0; // max over sampled slices of dist((phi,xi), graph)
    double beta_l2 = 0.0;        // L2-in-time norm of the relaxed selection
    double mu_l2 = 0.0;
};

struct LambdaSweepResult {
    std::vector<LambdaRung> rungs;
    double floor = 0.0;
    bool monotone = false;  // deltas strictly decreasing from the second gap on
    bool quartered = false; // last delta under a quarter of the first
};

// Halving ladder in the relaxation parameter at fixed grid and data. Each
// rung is a full coupled run; consecutive-rung trajectory gaps are the
// Cauchy evidence for the vanishing-relaxation limit.
LambdaSweepResult sweep_lambda(const RunConfig& base);

struct EpsilonRung {
    double epsilon = 0.0;
    double sol_gap = 0.0;    // max_n distance to the local reference run
    double sol_ratio = 0.0;
    double energy_gap = 0.0; // interaction vs Dirichlet energy of the local final state
    double op_gap = 0.0;     // operator mismatch on a smooth probe
    double tail = 0.0;       // kernel mass beyond the fixed cutoff
    double energy_final = 0.0; // interaction energy of this rung's own final state
};

struct ProbeRow {
    double epsilon = 0.0;
    double energy = 0.0;    // twice the interaction energy of the cosine probe
    double dirichlet = 0.0; // discrete Dirichlet energy of the same probe
    double gap = 0.0;
};

struct CompactRow {
    double delta = 0.0;
    double cdelta = 0.0; // worst pair ratio at this delta
};

struct EpsilonSweepResult {
    std::vector<EpsilonRung> rungs;
    std::vector<ProbeRow> probe;
    std::vector<CompactRow> compact;
    double probe_limit = 0.0; // continuum Dirichlet energy of the probe
    bool energy_gap_monotone = false;
    bool sol_gap_decreasing = false;
    bool tail_vanishing = false;
    double energy_bound = 0.0; // sup over rungs of energy_final
};

// Halving ladder in the interaction radius on a fixed grid, compared
// against one local-operator reference run with the same data.
EpsilonSweepResult sweep_epsilon(const RunConfig& base);

} // namespace scpf
