#include "scpf/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scpf/errors.hpp"
#include "scpf/version.hpp"

namespace scpf {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* storage_label(Storage s) {
    switch (s) {
    case Storage::Dense: return "dense";
    case Storage::Sparse: return "sparse";
    default: return "auto";
    }
}

void dump_json(const std::string& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

ordered_json manifest_json(const RunConfig& cfg) {
    ordered_json m;
    m["format"] = "scpf-run-1";
    m["version"] = SCPF_VERSION;
    m["config_hash"] = config_hash(cfg);
    m["seed"] = cfg.seed;
    m["mode"] = mode_name(cfg.mode);
    m["coupling"] = coupling_name(cfg.coupling);
    m["epsilon"] = cfg.epsilon;
    m["lambda"] = cfg.lambda;
    m["T"] = cfg.T;
    m["tau"] = cfg.tau_resolved();
    m["steps"] = cfg.steps();
    m["grid"] = {{"dim", cfg.grid.dim}, {"nx", cfg.grid.nx},   {"ny", cfg.grid.ny},
                 {"nz", cfg.grid.nz},   {"Lx", cfg.grid.Lx},   {"Ly", cfg.grid.Ly},
                 {"Lz", cfg.grid.Lz}};
    m["kernel"] = {{"family", kernel_name(cfg.kernel.family)},
                   {"profile_scale", cfg.kernel.profile_scale},
                   {"storage", storage_label(cfg.kernel.storage)},
                   {"node_cap", cfg.kernel.node_cap}};
    m["graph"] = {{"name", graph_name(cfg.beta.graph)}, {"exponent", cfg.beta.exponent}};
    return m;
}

std::string step_tag(int n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", n);
    return buf;
}

} // namespace

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("short write to " + path);
}

void write_csv(const std::string& path, const CsvTable& t) {
    std::ostringstream s;
    for (size_t i = 0; i < t.header.size(); ++i)
        s << (i ? "," : "") << t.header[i];
    s << "\n";
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i)
            s << (i ? "," : "") << format_g17(row[i]);
        s << "\n";
    }
    write_text(path, s.str());
}

void write_field(const std::string& basepath, const Grid& g, const Field& f, double t,
                 std::int64_t csv_node_cap) {
    {
        std::ofstream out(basepath + ".bin", std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + basepath + ".bin");
        out.write(reinterpret_cast<const char*>(f.v.data()),
                  static_cast<std::streamsize>(f.v.size() * sizeof(double)));
        if (!out) throw std::runtime_error("short write to " + basepath + ".bin");
    }
    ordered_json h;
    h["dim"] = g.dim;
    h["nx"] = g.n[0];
    h["ny"] = g.n[1];
    h["nz"] = g.n[2];
    h["count"] = g.nn;
    h["unit"] = unit_name(f.unit);
    h["t"] = t;
    h["layout"] = "x-fastest";
    h["scalar"] = "float64-native";
    dump_json(basepath + ".json", h);

    if (csv_node_cap > 0 && g.nn <= csv_node_cap) {
        std::ostringstream s;
        s << "x,y,z,value\n";
        for (std::int64_t i = 0; i < g.nn; ++i) {
            double x, y, z;
            g.coords(i, x, y, z);
            s << format_g17(x) << "," << format_g17(y) << "," << format_g17(z) << ","
              << format_g17(f.v[static_cast<size_t>(i)]) << "\n";
        }
        write_text(basepath + ".csv", s.str());
    }
}

Field read_field(const std::string& basepath, const Grid& g) {
    std::ifstream hin(basepath + ".json");
    if (!hin) throw std::runtime_error("cannot open " + basepath + ".json");
    ordered_json h = ordered_json::parse(hin);
    if (h.at("count").get<std::int64_t>() != g.nn)
        throw std::runtime_error("field size mismatch in " + basepath);
    Unit unit = unit_from_name(h.at("unit").get<std::string>());

    std::ifstream in(basepath + ".bin", std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + basepath + ".bin");
    std::vector<double> v(static_cast<size_t>(g.nn));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
        throw std::runtime_error("short read from " + basepath + ".bin");
    return make_field(g, unit, v);
}

void write_manifest(const std::string& dir, const RunConfig& cfg) {
    dump_json(dir + "/manifest.json", manifest_json(cfg));
}

void write_ledger_csv(const std::string& path, const Trajectory& traj) {
    CsvTable t;
    t.header = {"step",        "t",           "grad_mu_sq",  "phi_t_sq",
                "energy_grad", "energy_interaction", "energy_pot", "energy_total",
                "theta_l2",    "min_theta",   "mean_phi",    "xi_l2",
                "mu_l2",       "balance_residual"};
    for (const auto& r : traj.ledger)
        t.rows.push_back({static_cast<double>(r.step), r.t, r.grad_mu_sq, r.phi_t_sq,
                          r.energy_grad, r.energy_interaction, r.energy_pot, r.energy_total,
                          r.theta_l2, r.min_theta, r.mean_phi, r.xi_l2, r.mu_l2,
                          r.balance_residual});
    write_csv(path, t);
}

void write_run_outputs(const std::string& dir, const RunConfig& cfg, const RunResult& res) {
    ensure_dir(dir);
    ensure_dir(dir + "/fields");
    write_manifest(dir, cfg);
    write_text(dir + "/config.json", canonical_json(cfg) + "\n");
    write_ledger_csv(dir + "/ledger.csv", res.traj);

    const auto& stats = res.stats;
    ordered_json s;
    s["version"] = SCPF_VERSION;
    s["config_hash"] = config_hash(cfg);
    s["mode"] = mode_name(cfg.mode);
    s["coupling"] = coupling_name(cfg.coupling);
    s["steps"] = cfg.steps();
    s["tau"] = cfg.tau_resolved();
    ordered_json sp;
    sp["iters"] = stats.picard.iters;
    sp["tol_abs"] = stats.picard.tol_abs;
    sp["final_dist"] = stats.picard.final_dist;
    sp["final_dist_unweighted"] = stats.picard.final_dist_unweighted;
    sp["dists"] = stats.picard.dists;
    sp["ratios"] = stats.picard.ratios;
    s["picard"] = sp;
    s["per_step"] = stats.per_step;
    s["max_inner_sweeps"] = stats.max_inner_sweeps;
    s["newton_phi_total"] = stats.total_newton_phi;
    s["newton_theta_total"] = stats.total_newton_theta;
    s["cg_total"] = stats.total_cg;
    s["split_steps"] = stats.split_steps;
    s["min_theta"] = stats.min_theta;
    s["max_mean_drift"] = stats.max_mean_drift;
    s["final_balance_residual"] = stats.final_balance_residual;
    const auto& last = res.traj.ledger.back();
    s["final"] = {{"t", last.t},
                  {"energy_total", last.energy_total},
                  {"energy_grad", last.energy_grad},
                  {"energy_interaction", last.energy_interaction},
                  {"energy_pot", last.energy_pot},
                  {"theta_l2", last.theta_l2},
                  {"mu_l2", last.mu_l2},
                  {"xi_l2", last.xi_l2},
                  {"mean_phi", last.mean_phi},
                  {"min_theta", last.min_theta},
                  {"balance_residual", last.balance_residual}};
    dump_json(dir + "/summary.json", s);

    Grid g = make_grid(cfg.grid.dim, cfg.grid.nx, cfg.grid.ny, cfg.grid.nz, cfg.grid.Lx,
                       cfg.grid.Ly, cfg.grid.Lz);
    auto emit = [&](const SystemState& st, const std::string& suffix) {
        std::int64_t cap = cfg.output.csv_node_cap;
        write_field(dir + "/fields/phi_" + suffix, g, {&g, Unit::OrderParameter, st.phi}, st.t,
                    cap);
        write_field(dir + "/fields/theta_" + suffix, g, {&g, Unit::Temperature, st.theta}, st.t,
                    cap);
        write_field(dir + "/fields/mu_" + suffix, g, {&g, Unit::Potential, st.mu}, st.t, cap);
        write_field(dir + "/fields/xi_" + suffix, g, {&g, Unit::Generic, st.xi}, st.t, cap);
    };
    const int N = static_cast<int>(res.traj.states.size()) - 1;
    if (cfg.output.snapshots && cfg.output.snapshot_every > 0)
        for (int n = 0; n <= N; n += cfg.output.snapshot_every)
            emit(res.traj.states[static_cast<size_t>(n)], step_tag(n));
    emit(res.traj.states.back(), "final");
}

void write_lambda_outputs(const std::string& dir, const RunConfig& cfg,
                          const LambdaSweepResult& res) {
    ensure_dir(dir);
    write_manifest(dir, cfg);

    CsvTable full;
    full.header = {"rung", "lambda", "delta", "ratio", "floored", "ln_distance",
                   "graph_distance", "beta_l2", "mu_l2"};
    CsvTable rates;
    rates.header = {"rung", "value", "ratio"};
    std::vector<double> xs;
    std::vector<double> deltas;
    for (size_t k = 0; k < res.rungs.size(); ++k) {
        const auto& r = res.rungs[k];
        full.rows.push_back({static_cast<double>(k), r.lambda, r.delta, r.ratio,
                             r.floored ? 1.0 : 0.0, r.ln_distance, r.graph_distance, r.beta_l2,
                             r.mu_l2});
        if (k + 1 < res.rungs.size()) {
            rates.rows.push_back({static_cast<double>(k), r.delta, r.ratio});
            xs.push_back(r.lambda);
            deltas.push_back(r.delta);
        }
    }
    write_csv(dir + "/sweep_lambda.csv", full);
    write_csv(dir + "/rates.csv", rates);

    ordered_json v;
    v["monotone"] = res.monotone;
    v["quartered"] = res.quartered;
    v["floor"] = res.floor;
    dump_json(dir + "/verdict.json", v);

    if (cfg.output.svg)
        write_text(dir + "/sweep_lambda.svg",
                   svg_rate_plot("trajectory gap per relaxation rung", xs, {deltas}, {"delta"}));
}

void write_epsilon_outputs(const std::string& dir, const RunConfig& cfg,
                           const EpsilonSweepResult& res) {
    ensure_dir(dir);
    write_manifest(dir, cfg);

    CsvTable full;
    full.header = {"rung", "epsilon", "sol_gap", "sol_ratio", "energy_gap", "op_gap", "tail",
                   "energy_final"};
    CsvTable rates;
    rates.header = {"rung", "value", "ratio"};
    std::vector<double> xs, gaps, egaps;
    for (size_t k = 0; k < res.rungs.size(); ++k) {
        const auto& r = res.rungs[k];
        full.rows.push_back({static_cast<double>(k), r.epsilon, r.sol_gap, r.sol_ratio,
                             r.energy_gap, r.op_gap, r.tail, r.energy_final});
        rates.rows.push_back({static_cast<double>(k), r.sol_gap, r.sol_ratio});
        xs.push_back(r.epsilon);
        gaps.push_back(r.sol_gap);
        egaps.push_back(r.energy_gap);
    }
    write_csv(dir + "/sweep_epsilon.csv", full);
    write_csv(dir + "/rates.csv", rates);

    CsvTable probe;
    probe.header = {"epsilon", "energy", "dirichlet_energy", "gap"};
    for (const auto& p : res.probe) probe.rows.push_back({p.epsilon, p.energy, p.dirichlet, p.gap});
    write_csv(dir + "/probe.csv", probe);

    CsvTable comp;
    comp.header = {"delta", "cdelta"};
    for (const auto& c : res.compact) comp.rows.push_back({c.delta, c.cdelta});
    write_csv(dir + "/compact.csv", comp);

    ordered_json v;
    v["energy_gap_monotone"] = res.energy_gap_monotone;
    v["sol_gap_decreasing"] = res.sol_gap_decreasing;
    v["tail_vanishing"] = res.tail_vanishing;
    v["energy_bound"] = res.energy_bound;
    v["probe_limit"] = res.probe_limit;
    dump_json(dir + "/verdict.json", v);

    if (cfg.output.svg)
        write_text(dir + "/sweep_epsilon.svg",
                   svg_rate_plot("gaps per interaction-radius rung", xs, {gaps, egaps},
                                 {"sol_gap", "energy_gap"}));
}

void write_operator_report(const std::string& dir, const RunConfig& cfg,
                           const OperatorReport& rep) {
    ensure_dir(dir);
    write_manifest(dir, cfg);
    ordered_json j;
    j["all_pass"] = rep.all_pass();
    ordered_json arr = ordered_json::array();
    for (const auto& c : rep.checks)
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value},
                       {"detail", c.detail}});
    j["checks"] = arr;
    dump_json(dir + "/operators.json", j);

    std::ostringstream s;
    s << "name,pass,value\n";
    for (const auto& c : rep.checks)
        s << c.name << "," << (c.pass ? 1 : 0) << "," << format_g17(c.value) << "\n";
    write_text(dir + "/operator_checks.csv", s.str());
}

std::string svg_rate_plot(const std::string& title, const std::vector<double>& x,
                          const std::vector<std::vector<double>>& series,
                          const std::vector<std::string>& labels) {
    const double W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
    auto log_range = [](const std::vector<double>& v, double& lo, double& hi) {
        for (double t : v)
            if (t > 0.0) {
                double l = std::log10(t);
                lo = std::min(lo, l);
                hi = std::max(hi, l);
            }
    };
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    log_range(x, xlo, xhi);
    for (const auto& s : series) log_range(s, ylo, yhi);
    if (xlo > xhi) { xlo = 0; xhi = 1; }
    if (ylo > yhi) { ylo = 0; yhi = 1; }
    if (xhi - xlo < 1e-12) { xlo -= 0.5; xhi += 0.5; }
    if (yhi - ylo < 1e-12) { ylo -= 0.5; yhi += 0.5; }

    auto px = [&](double v) { return ML + (std::log10(v) - xlo) / (xhi - xlo) * (W - ML - MR); };
    auto py = [&](double v) { return H - MB - (std::log10(v) - ylo) / (yhi - ylo) * (H - MT - MB); };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };

    static const char* palette[] = {"#1f6fb2", "#c0392b", "#1e8449", "#7d3c98"};
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" "
         "font-size=\"15\">" << title << "</text>\n";
    s << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << W - ML - MR << "\" height=\""
      << H - MT - MB << "\" fill=\"none\" stroke=\"#444\"/>\n";

    // decade ticks
    for (int d = static_cast<int>(std::ceil(ylo)); d <= static_cast<int>(std::floor(yhi)); ++d) {
        double yy = H - MB - (d - ylo) / (yhi - ylo) * (H - MT - MB);
        s << "<line x1=\"" << ML << "\" y1=\"" << num(yy) << "\" x2=\"" << W - MR << "\" y2=\""
          << num(yy) << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << ML - 8 << "\" y=\"" << num(yy + 4)
          << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">1e" << d
          << "</text>\n";
    }
    for (int d = static_cast<int>(std::ceil(xlo)); d <= static_cast<int>(std::floor(xhi)); ++d) {
        double xx = ML + (d - xlo) / (xhi - xlo) * (W - ML - MR);
        s << "<line x1=\"" << num(xx) << "\" y1=\"" << MT << "\" x2=\"" << num(xx) << "\" y2=\""
          << H - MB << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << num(xx) << "\" y=\"" << H - MB + 18
          << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">1e" << d
          << "</text>\n";
    }

    for (size_t k = 0; k < series.size(); ++k) {
        const char* color = palette[k % 4];
        std::ostringstream pts;
        for (size_t i = 0; i < series[k].size() && i < x.size(); ++i) {
            if (!(series[k][i] > 0.0) || !(x[i] > 0.0)) continue;
            pts << num(px(x[i])) << "," << num(py(series[k][i])) << " ";
        }
        s << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        for (size_t i = 0; i < series[k].size() && i < x.size(); ++i) {
            if (!(series[k][i] > 0.0) || !(x[i] > 0.0)) continue;
            s << "<circle cx=\"" << num(px(x[i])) << "\" cy=\"" << num(py(series[k][i]))
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        if (k < labels.size())
            s << "<text x=\"" << W - MR - 10 << "\" y=\"" << MT + 18 + 16 * k
              << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"12\" fill=\""
              << color << "\">" << labels[k] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

} // namespace scpf
