#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "scpf/config.hpp"
#include "scpf/coupling.hpp"
#include "scpf/errors.hpp"
#include "scpf/io.hpp"
#include "scpf/sweeps.hpp"
#include "scpf/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerics = 3;

scpf::RunConfig load_config(const std::string& path, const std::string& mode_override,
                            std::uint64_t seed_override, bool seed_set) {
    scpf::RunConfig cfg = scpf::parse_config_file(path);
    if (!mode_override.empty() || seed_set) {
        if (!mode_override.empty()) cfg.mode = scpf::mode_from_name(mode_override);
        if (seed_set) cfg.seed = seed_override;
        auto msgs = scpf::validate(cfg);
        if (!msgs.empty()) throw scpf::ConfigError(msgs);
    }
    return cfg;
}

int run_simulate(const scpf::RunConfig& cfg, const std::string& out_dir) {
    scpf::CoupledSolver solver(cfg);
    auto res = solver.run();
    scpf::write_run_outputs(out_dir, cfg, res);
    std::printf("run finished: %d steps, coupling iterations %d, min theta %.6g\n",
                solver.steps(),
                cfg.coupling == scpf::CouplingMode::GlobalPicard ? res.stats.picard.iters
                                                                : res.stats.max_inner_sweeps,
                res.stats.min_theta);
    std::printf("final energy %.12g, balance residual %.3e, mean drift %.3e\n",
                res.traj.ledger.back().energy_total, res.stats.final_balance_residual,
                res.stats.max_mean_drift);
    std::printf("outputs in %s\n", out_dir.c_str());
    return kExitOk;
}

int run_sweep_lambda(const scpf::RunConfig& cfg, const std::string& out_dir) {
    auto res = scpf::sweep_lambda(cfg);
    scpf::write_lambda_outputs(out_dir, cfg, res);
    for (size_t k = 0; k < res.rungs.size(); ++k) {
        const auto& r = res.rungs[k];
        std::printf("rung %zu: lambda %.6g  delta %.6e  ratio %.4f%s\n", k, r.lambda, r.delta,
                    r.ratio, r.floored ? "  [floored]" : "");
    }
    std::printf("monotone: %s, last under a quarter of first: %s\n",
                res.monotone ? "yes" : "NO", res.quartered ? "yes" : "NO");
    if (!res.monotone) {
        std::fprintf(stderr, "rung gaps fail to decrease monotonically\n");
        return kExitNumerics;
    }
    return kExitOk;
}

int run_sweep_epsilon(const scpf::RunConfig& cfg, const std::string& out_dir) {
    auto res = scpf::sweep_epsilon(cfg);
    scpf::write_epsilon_outputs(out_dir, cfg, res);
    for (size_t k = 0; k < res.rungs.size(); ++k) {
        const auto& r = res.rungs[k];
        std::printf("rung %zu: eps %.6g  sol_gap %.6e  energy_gap %.6e  op_gap %.6e\n", k,
                    r.epsilon, r.sol_gap, r.energy_gap, r.op_gap);
    }
    std::printf("energy gaps monotone: %s, solution gaps decreasing: %s\n",
                res.energy_gap_monotone ? "yes" : "NO",
                res.sol_gap_decreasing ? "yes" : "NO");
    if (!res.energy_gap_monotone) {
        std::fprintf(stderr, "interaction-vs-local energy gaps fail to decrease\n");
        return kExitNumerics;
    }
    return kExitOk;
}

int run_check_operators(const scpf::RunConfig& cfg, const std::string& out_dir) {
    auto rep = scpf::check_operator_lemmas(cfg);
    scpf::write_operator_report(out_dir, cfg, rep);
    for (const auto& c : rep.checks)
        std::printf("%-22s %s  %.6e  %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL", c.value,
                    c.detail.c_str());
    if (!rep.all_pass()) {
        std::fprintf(stderr, "operator battery reported failures\n");
        return kExitNumerics;
    }
    return kExitOk;
}

int run_tabulate(const std::string& graph_name_s, int exponent, double lam, double lo, double hi,
                 int count, const std::string& out_path) {
    auto graph = scpf::MonotoneGraph::make(scpf::graph_from_name(graph_name_s), exponent);
    scpf::LogRegularization reg(lam);
    std::ostringstream s;
    s << "r,resolvent,yosida,moreau,reg_log,full_op\n";
    for (int i = 0; i < count; ++i) {
        double r = lo + (hi - lo) * i / (count - 1);
        s << scpf::format_g17(r) << "," << scpf::format_g17(graph.resolvent(lam, r)) << ","
          << scpf::format_g17(graph.yosida(lam, r)) << ","
          << scpf::format_g17(graph.moreau(lam, r)) << ",";
        if (r > 0) {
            s << scpf::format_g17(reg.reg_log(r)) << "," << scpf::format_g17(reg.full_op(r));
        } else {
            s << "nan,nan";
        }
        s << "\n";
    }
    if (out_path.empty())
        std::fputs(s.str().c_str(), stdout);
    else
        scpf::write_text(out_path, s.str());
    return kExitOk;
}

int run_plot(const std::string& in_path, const std::string& out_path, const std::string& title) {
    std::ifstream in(in_path);
    if (!in) {
        std::fprintf(stderr, "cannot open %s\n", in_path.c_str());
        return kExitConfig;
    }
    std::string line;
    if (!std::getline(in, line)) {
        std::fprintf(stderr, "%s is empty\n", in_path.c_str());
        return kExitConfig;
    }
    std::vector<std::string> labels;
    {
        std::stringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) labels.push_back(cell);
    }
    if (labels.size() < 2) {
        std::fprintf(stderr, "%s needs at least two columns\n", in_path.c_str());
        return kExitConfig;
    }
    std::vector<double> xs;
    std::vector<std::vector<double>> series(labels.size() - 1);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        size_t col = 0;
        while (std::getline(row, cell, ',')) {
            double v = std::strtod(cell.c_str(), nullptr);
            if (col == 0)
                xs.push_back(v);
            else if (col - 1 < series.size())
                series[col - 1].push_back(v);
            ++col;
        }
    }
    labels.erase(labels.begin());
    scpf::write_text(out_path, scpf::svg_rate_plot(title, xs, series, labels));
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conserved phase-field system with a singular temperature coupling"};
    app.set_version_flag("--version", SCPF_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", mode_override;
    std::uint64_t seed_override = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        if (needs_config)
            sub->add_option("--config", config_path, "config file (json)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--mode", mode_override,
                        "override the run mode (eps-lambda, eps, local)");
        sub->add_option("--seed", seed_override, "override the probe seed");
    };

    auto* sim = app.add_subcommand("simulate", "run the coupled system once");
    add_common(sim);
    auto* swl = app.add_subcommand("sweep-lambda", "halving ladder in the relaxation parameter");
    add_common(swl);
    auto* swe = app.add_subcommand("sweep-epsilon", "halving ladder in the interaction radius");
    add_common(swe);
    auto* chk = app.add_subcommand("check-operators", "structural battery on the operators");
    add_common(chk);

    std::string tab_graph = "log", tab_out;
    int tab_exponent = 3, tab_count = 21;
    double tab_lambda = 0.1, tab_lo = -0.9, tab_hi = 0.9;
    auto* tab = app.add_subcommand("tabulate-graphs", "print graph regularization tables");
    tab->add_option("--graph", tab_graph, "log, indicator, power or natural-log");
    tab->add_option("--exponent", tab_exponent, "odd exponent for the power graph");
    tab->add_option("--lambda", tab_lambda, "relaxation parameter")->check(CLI::PositiveNumber);
    tab->add_option("--lo", tab_lo, "left end of the argument range");
    tab->add_option("--hi", tab_hi, "right end of the argument range");
    tab->add_option("--count", tab_count, "number of rows")->check(CLI::Range(2, 100000));
    tab->add_option("--out", tab_out, "write csv here instead of stdout");

    std::string plot_in, plot_out = "plot.svg", plot_title = "ladder";
    auto* plt = app.add_subcommand("plot", "render a ladder csv as a log-log svg");
    plt->add_option("--in", plot_in, "csv with x in the first column")->required();
    plt->add_option("--out", plot_out, "svg path");
    plt->add_option("--title", plot_title, "plot title");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tab->parsed())
            return run_tabulate(tab_graph, tab_exponent, tab_lambda, tab_lo, tab_hi, tab_count,
                                tab_out);
        if (plt->parsed()) return run_plot(plot_in, plot_out, plot_title);

        bool seed_set = sim->count("--seed") || swl->count("--seed") || swe->count("--seed") ||
                        chk->count("--seed");
        scpf::RunConfig cfg = load_config(config_path, mode_override, seed_override,
                                          seed_set != 0);
        if (sim->parsed()) return run_simulate(cfg, out_dir);
        if (swl->parsed()) return run_sweep_lambda(cfg, out_dir);
        if (swe->parsed()) return run_sweep_epsilon(cfg, out_dir);
        if (chk->parsed()) return run_check_operators(cfg, out_dir);
    } catch (const scpf::ConfigError& e) {
        for (const auto& m : e.messages) std::fprintf(stderr, "config: %s\n", m.c_str());
        return kExitConfig;
    } catch (const scpf::NumericsError& e) {
        std::fprintf(stderr, "numerics: %s\n", e.what());
        return kExitNumerics;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
