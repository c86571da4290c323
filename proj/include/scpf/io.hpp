#pragma once

#include <string>
#include <vector>

#include "scpf/config.hpp"
#include "scpf/coupling.hpp"
#include "scpf/grid.hpp"
#include "scpf/state.hpp"
#include "scpf/sweeps.hpp"

namespace scpf {

void ensure_dir(const std::string& path);

// shortest-roundtrip decimal for doubles, shared by every CSV writer
std::string format_g17(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
void write_csv(const std::string& path, const CsvTable& t);
void write_text(const std::string& path, const std::string& text);

// Field snapshot: raw doubles next to a small json sidecar carrying the
// shape, the unit and the time stamp. Grids under the configured node cap
// additionally get a plain csv with one row per cell.
void write_field(const std::string& basepath, const Grid& g, const Field& f, double t,
                 std::int64_t csv_node_cap = 0);
Field read_field(const std::string& basepath, const Grid& g);

// Reproducibility record of a run directory. Content depends only on the
// resolved configuration, never on clocks or machine load.
void write_manifest(const std::string& dir, const RunConfig& cfg);

void write_ledger_csv(const std::string& path, const Trajectory& traj);
void write_run_outputs(const std::string& dir, const RunConfig& cfg, const RunResult& res);
void write_lambda_outputs(const std::string& dir, const RunConfig& cfg,
                          const LambdaSweepResult& res);
void write_epsilon_outputs(const std::string& dir, const RunConfig& cfg,
                           const EpsilonSweepResult& res);
void write_operator_report(const std::string& dir, const RunConfig& cfg,
                           const OperatorReport& rep);

// Hand-built log-log ladder plot; standalone svg, deterministic bytes.
std::string svg_rate_plot(const std::string& title, const std::vector<double>& x,
                          const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels);

} // namespace scpf
