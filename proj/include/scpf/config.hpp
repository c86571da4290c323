#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "scpf/expressions.hpp"
#include "scpf/graphs.hpp"
#include "scpf/grid.hpp"
#include "scpf/kernels.hpp"
#include "scpf/nonlocal.hpp"

namespace scpf {

enum class RunMode { EpsLambda, Eps, Local };
enum class CouplingMode { GlobalPicard, PerStep };

const char* mode_name(RunMode m);
RunMode mode_from_name(const std::string& s);
const char* coupling_name(CouplingMode m);
CouplingMode coupling_from_name(const std::string& s);

struct Tolerances {
    double scalar_newton = 1e-12;  // absolute, resolvent root finds
    double newton = 1e-9;          // absolute residual, field newton solves
    double picard_scale = 1e-10;   // relative factor on the trajectory metric
    double cg_rtol = 1e-10;
    double mass = 1e-10;
    int max_newton = 30;
    int max_picard = 200;
    int max_cg = 20000;
};

struct GridCfg {
    int dim = 2;
    int nx = 16, ny = 16, nz = 1;
    double Lx = 1.0, Ly = 1.0, Lz = 1.0;
};

struct KernelCfg {
    KernelId family = KernelId::Polynomial;
    double profile_scale = 1.0;
    Storage storage = Storage::Auto;
    std::int64_t node_cap = 4096;
};

struct BetaCfg {
    GraphId graph = GraphId::Power;
    int exponent = 3;
};

struct SweepCfg {
    double eps0 = 0.4;
    int eps_rungs = 4;
    double lambda0 = 0.5;
    int lambda_rungs = 5;
};

struct OutputCfg {
    bool snapshots = false;
    int snapshot_every = 0;      // 0 means final state only
    std::int64_t csv_node_cap = 4096;
    bool svg = false;
};

struct RunConfig {
    RunMode mode = RunMode::EpsLambda;
    CouplingMode coupling = CouplingMode::PerStep;
    double epsilon = 0.2;
    double lambda = 0.5;
    double T = 0.1;
    double tau = 0.0;            // 0 resolves to T/200
    GridCfg grid;
    KernelCfg kernel;
    BetaCfg beta;
    PiSpec pi;
    Expr f;                      // heat source
    Expr theta_gamma{1.0, {}};   // boundary temperature
    Expr theta0{1.0, {}};
    Expr phi0;
    bool mollify_phi0 = false;   // makes the eps-stage datum honestly eps-dependent
    std::optional<std::pair<double, double>> mean_window; // admissible mean range for the eps stage
    std::optional<Expr> phi0_eps_lambda;                  // optional final-stage override
    double theta_lower = 0.0;    // 0 means derive from the data bounds
    double theta_upper = 0.0;
    Tolerances tol;
    SweepCfg sweep;
    OutputCfg output;
    std::uint64_t seed = 12345;

    double tau_resolved() const { return tau > 0.0 ? tau : T / 200.0; }
    int steps() const;
};

// Parse from a JSON file or text. Throws ConfigError carrying one
// labeled message per violated assumption. The environment variables
// SCPF_NEWTON_TOL, SCPF_PICARD_SCALE, SCPF_CG_RTOL, SCPF_SCALAR_TOL
// override the corresponding tolerances.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Validation used by the parser; exposed so tests can probe individual rules.
std::vector<std::string> validate(const RunConfig& c);

// Stable content hash of the fully resolved config (FNV-1a over the
// canonical serialization); lands in the output manifest.
std::string config_hash(const RunConfig& c);
std::string canonical_json(const RunConfig& c);

} // namespace scpf
