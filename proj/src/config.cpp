#include "scpf/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "scpf/errors.hpp"

namespace scpf {

using nlohmann::json;
using nlohmann::ordered_json;

const char* mode_name(RunMode m) {
    switch (m) {
        case RunMode::EpsLambda: return "eps-lambda";
        case RunMode::Eps: return "eps";
        default: return "local";
    }
}

RunMode mode_from_name(const std::string& s) {
    if (s == "eps-lambda") return RunMode::EpsLambda;
    if (s == "eps") return RunMode::Eps;
    if (s == "local") return RunMode::Local;
    throw ConfigError("mode must be one of eps-lambda, eps, local");
}

const char* coupling_name(CouplingMode m) {
    return m == CouplingMode::GlobalPicard ? "global-picard" : "per-step";
}

CouplingMode coupling_from_name(const std::string& s) {
    if (s == "global-picard") return CouplingMode::GlobalPicard;
    if (s == "per-step") return CouplingMode::PerStep;
    throw ConfigError("coupling must be global-picard or per-step");
}

int RunConfig::steps() const {
    double t = tau_resolved();
    return static_cast<int>(std::llround(T / t));
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where, std::vector<std::string>& errs) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) { ok = true; break; }
        if (!ok) errs.push_back("unknown key '" + it.key() + "' in " + where);
    }
}

Expr parse_expr(const json& j, const std::string& where, std::vector<std::string>& errs) {
    Expr e;
    if (j.is_number()) {
        e.c0 = j.get<double>();
        return e;
    }
    if (!j.is_object()) {
        errs.push_back(where + ": expression must be a number or an object");
        return e;
    }
    reject_unknown(j, {"c0", "terms"}, where, errs);
    e.c0 = j.value("c0", 0.0);
    if (j.contains("terms")) {
        for (const auto& t : j.at("terms")) {
            reject_unknown(t, {"amp", "kx", "ky", "kz", "ramp"}, where + ".terms", errs);
            ExprTerm tm;
            tm.amp = t.value("amp", 0.0);
            tm.kx = t.value("kx", 0);
            tm.ky = t.value("ky", 0);
            tm.kz = t.value("kz", 0);
            tm.ramp = t.value("ramp", 0.0);
            if (tm.kx < 0 || tm.ky < 0 || tm.kz < 0)
                errs.push_back(where + ": wavenumbers must be nonnegative");
            e.terms.push_back(tm);
        }
    }
    return e;
}

ordered_json expr_json(const Expr& e) {
    ordered_json j;
    j["c0"] = e.c0;
    auto terms = ordered_json::array();
    for (const auto& t : e.terms) {
        ordered_json tj;
        tj["amp"] = t.amp;
        tj["kx"] = t.kx;
        tj["ky"] = t.ky;
        tj["kz"] = t.kz;
        tj["ramp"] = t.ramp;
        terms.push_back(tj);
    }
    j["terms"] = terms;
    return j;
}

double env_tol(const char* name, double fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    char* end = nullptr;
    double x = std::strtod(v, &end);
    if (end == v || !(x > 0.0))
        throw ConfigError(std::string("environment override ") + name + " must be a positive number");
    return x;
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }

    std::vector<std::string> errs;
    RunConfig c;

    reject_unknown(j,
                   {"mode", "coupling", "epsilon", "lambda", "T", "tau", "grid", "kernel",
                    "beta", "pi", "heat_source", "theta_gamma", "theta0", "phi0", "phi0_eps",
                    "phi0_eps_lambda", "theta_bounds", "tolerances", "sweep", "output", "seed"},
                   "config", errs);

    try {
        if (j.contains("mode")) c.mode = mode_from_name(j.at("mode").get<std::string>());
        if (j.contains("coupling")) c.coupling = coupling_from_name(j.at("coupling").get<std::string>());
    } catch (const ConfigError& e) {
        errs.insert(errs.end(), e.messages.begin(), e.messages.end());
    }

    c.epsilon = j.value("epsilon", c.epsilon);
    c.lambda = j.value("lambda", c.lambda);
    c.T = j.value("T", c.T);
    c.tau = j.value("tau", c.tau);
    c.seed = j.value("seed", c.seed);

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, {"dim", "nx", "ny", "nz", "Lx", "Ly", "Lz"}, "grid", errs);
        c.grid.dim = g.value("dim", 2);
        c.grid.nx = g.value("nx", 16);
        c.grid.ny = g.value("ny", 16);
        c.grid.nz = g.value("nz", 1);
        c.grid.Lx = g.value("Lx", 1.0);
        c.grid.Ly = g.value("Ly", 1.0);
        c.grid.Lz = g.value("Lz", 1.0);
    }

    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        reject_unknown(k, {"family", "profile_scale", "storage", "node_cap"}, "kernel", errs);
        try {
            if (k.contains("family")) c.kernel.family = kernel_from_name(k.at("family").get<std::string>());
        } catch (const std::exception& ex) {
            errs.push_back(ex.what());
        }
        c.kernel.profile_scale = k.value("profile_scale", 1.0);
        if (k.contains("storage")) {
            std::string s = k.at("storage").get<std::string>();
            if (s == "auto") c.kernel.storage = Storage::Auto;
            else if (s == "dense") c.kernel.storage = Storage::Dense;
            else if (s == "sparse") c.kernel.storage = Storage::Sparse;
            else errs.push_back("kernel.storage must be auto, dense or sparse");
        }
        c.kernel.node_cap = k.value("node_cap", std::int64_t{4096});
    }

    if (j.contains("beta")) {
        const auto& b = j.at("beta");
        reject_unknown(b, {"graph", "exponent"}, "beta", errs);
        try {
            if (b.contains("graph")) c.beta.graph = graph_from_name(b.at("graph").get<std::string>());
        } catch (const std::exception& ex) {
            errs.push_back(ex.what());
        }
        c.beta.exponent = b.value("exponent", 3);
    }

    if (j.contains("pi")) {
        const auto& p = j.at("pi");
        reject_unknown(p, {"slope", "coef", "deg"}, "pi", errs);
        c.pi.slope = p.value("slope", -1.0);
        c.pi.coef = p.value("coef", 0.0);
        c.pi.deg = p.value("deg", 1);
    }

    if (j.contains("heat_source")) c.f = parse_expr(j.at("heat_source"), "heat_source", errs);
    if (j.contains("theta_gamma")) c.theta_gamma = parse_expr(j.at("theta_gamma"), "theta_gamma", errs);
    if (j.contains("theta0")) c.theta0 = parse_expr(j.at("theta0"), "theta0", errs);
    if (j.contains("phi0")) c.phi0 = parse_expr(j.at("phi0"), "phi0", errs);

    if (j.contains("phi0_eps")) {
        const auto& p = j.at("phi0_eps");
        reject_unknown(p, {"mollify", "mean_window"}, "phi0_eps", errs);
        c.mollify_phi0 = p.value("mollify", false);
        if (p.contains("mean_window")) {
            const auto& w = p.at("mean_window");
            if (!w.is_array() || w.size() != 2)
                errs.push_back("phi0_eps.mean_window must be [lo, hi]");
            else
                c.mean_window = std::make_pair(w[0].get<double>(), w[1].get<double>());
        }
    }

    if (j.contains("phi0_eps_lambda"))
        c.phi0_eps_lambda = parse_expr(j.at("phi0_eps_lambda"), "phi0_eps_lambda", errs);

    if (j.contains("theta_bounds")) {
        const auto& b = j.at("theta_bounds");
        reject_unknown(b, {"lower", "upper"}, "theta_bounds", errs);
        c.theta_lower = b.value("lower", 0.0);
        c.theta_upper = b.value("upper", 0.0);
    }

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        reject_unknown(t,
                       {"scalar_newton", "newton", "picard_scale", "cg_rtol", "mass",
                        "max_newton", "max_picard", "max_cg"},
                       "tolerances", errs);
        c.tol.scalar_newton = t.value("scalar_newton", c.tol.scalar_newton);
        c.tol.newton = t.value("newton", c.tol.newton);
        c.tol.picard_scale = t.value("picard_scale", c.tol.picard_scale);
        c.tol.cg_rtol = t.value("cg_rtol", c.tol.cg_rtol);
        c.tol.mass = t.value("mass", c.tol.mass);
        c.tol.max_newton = t.value("max_newton", c.tol.max_newton);
        c.tol.max_picard = t.value("max_picard", c.tol.max_picard);
        c.tol.max_cg = t.value("max_cg", c.tol.max_cg);
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        reject_unknown(s, {"eps0", "eps_rungs", "lambda0", "lambda_rungs"}, "sweep", errs);
        c.sweep.eps0 = s.value("eps0", c.sweep.eps0);
        c.sweep.eps_rungs = s.value("eps_rungs", c.sweep.eps_rungs);
        c.sweep.lambda0 = s.value("lambda0", c.sweep.lambda0);
        c.sweep.lambda_rungs = s.value("lambda_rungs", c.sweep.lambda_rungs);
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        reject_unknown(o, {"snapshots", "snapshot_every", "csv_node_cap", "svg"}, "output", errs);
        c.output.snapshots = o.value("snapshots", false);
        c.output.snapshot_every = o.value("snapshot_every", 0);
        c.output.csv_node_cap = o.value("csv_node_cap", std::int64_t{4096});
        c.output.svg = o.value("svg", false);
    }

    c.tol.newton = env_tol("SCPF_NEWTON_TOL", c.tol.newton);
    c.tol.picard_scale = env_tol("SCPF_PICARD_SCALE", c.tol.picard_scale);
    c.tol.cg_rtol = env_tol("SCPF_CG_RTOL", c.tol.cg_rtol);
    c.tol.scalar_newton = env_tol("SCPF_SCALAR_TOL", c.tol.scalar_newton);

    auto more = validate(c);
    errs.insert(errs.end(), more.begin(), more.end());
    if (!errs.empty()) throw ConfigError(errs);
    return c;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<std::string> validate(const RunConfig& c) {
    std::vector<std::string> errs;

    // structural checks first; later rules need a working grid and graph
    if (!(c.T > 0.0)) errs.push_back("T must be positive");
    double tau = c.tau_resolved();
    if (!(tau > 0.0) || tau > c.T) errs.push_back("tau must lie in (0, T]");
    else {
        double k = c.T / tau;
        if (std::abs(k - std::llround(k)) > 1e-9 * k)
            errs.push_back("tau must divide T");
    }
    if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) errs.push_back("epsilon must lie in (0,1)");
    if (!(c.lambda > 0.0 && c.lambda < 1.0)) errs.push_back("lambda must lie in (0,1)");
    if (c.kernel.node_cap < 1) errs.push_back("kernel.node_cap must be positive");

    Grid grid;
    try {
        grid = make_grid(c.grid.dim, c.grid.nx, c.grid.ny, c.grid.nz, c.grid.Lx, c.grid.Ly, c.grid.Lz);
    } catch (const ConfigError& e) {
        errs.insert(errs.end(), e.messages.begin(), e.messages.end());
        return errs;
    }

    if (c.mode != RunMode::Local && c.epsilon > 0.0 && c.epsilon < 1.0) {
        double hmin = std::min(grid.h[0], grid.h[1]);
        if (grid.dim == 3) hmin = std::min(hmin, grid.h[2]);
        if (c.epsilon < hmin)
            errs.push_back("epsilon support does not reach any neighbor cell on this grid");
    }

    // C1: kernel calibration self test
    {
        KernelFamily fam = KernelFamily::make(c.kernel.family, c.grid.dim, c.kernel.profile_scale);
        if (!fam.normalization_ok())
            errs.push_back("C1: kernel profile fails the moment normalization self-test");
    }

    // C2: admissible graph
    MonotoneGraph graph;
    bool graph_ok = true;
    try {
        graph = MonotoneGraph::make(c.beta.graph, c.beta.exponent);
    } catch (const std::exception&) {
        errs.push_back("C2: power graph exponent must be a positive odd integer");
        graph_ok = false;
    }

    // C3: Lipschitz perturbation
    if (c.pi.deg < 0) errs.push_back("C3: pi monomial degree must be nonnegative");
    else if (c.pi.coef != 0.0 && c.pi.deg > 1)
        errs.push_back("C3: pi must be globally Lipschitz; monomial degree above 1 is not");
    if (!std::isfinite(c.pi.slope) || !std::isfinite(c.pi.coef))
        errs.push_back("C3: pi coefficients must be finite");

    // C4: source data. Coefficients are finite in any config that made it
    // through parsing, but finite coefficients can still overflow when the
    // expression is evaluated, so the real check is on the sampled field:
    // the discrete square integral over the space-time lattice must be finite.
    if (!c.f.all_finite_coeffs()) {
        errs.push_back("C4: heat source coefficients must be finite");
    } else {
        int N = (tau > 0.0 && tau <= c.T) ? c.steps() : 1;
        double sq = 0.0;
        std::vector<double> fn;
        for (int n = 0; n <= N && std::isfinite(sq); ++n) {
            c.f.sample(grid, n * (c.T / N), fn);
            for (double v : fn) sq += v * v;
        }
        if (!std::isfinite(sq))
            errs.push_back("C4: heat source must be square integrable on the space-time cylinder");
    }

    // C5: uniformly positive temperature data. Checked on the sampled
    // data the run actually uses: theta0 nodewise, theta_gamma on the
    // boundary nodes over the whole time ladder.
    if (!c.theta0.all_finite_coeffs() || !c.theta_gamma.all_finite_coeffs()) {
        errs.push_back("C5: temperature data coefficients must be finite");
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        auto t0 = c.theta0.sample(grid, 0.0);
        for (double v : t0) { lo = std::min(lo, v); hi = std::max(hi, v); }
        int N = (tau > 0.0 && tau <= c.T) ? c.steps() : 1;
        for (int n = 0; n <= N; ++n) {
            double t = n * (c.T / N);
            for (auto id : grid.boundary_nodes) {
                double x, y, z;
                grid.coords(id, x, y, z);
                double v = c.theta_gamma.eval(grid, x, y, z, t);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (c.theta_lower != 0.0 || c.theta_upper != 0.0) {
            if (!(c.theta_lower > 0.0))
                errs.push_back("C5: theta_lower must be positive");
            else if (lo < c.theta_lower || (c.theta_upper > 0.0 && hi > c.theta_upper))
                errs.push_back("C5: temperature data leave the declared [theta_lower, theta_upper] band");
            if (c.theta_upper > 0.0 && c.theta_upper <= c.theta_lower)
                errs.push_back("C5: theta_upper must exceed theta_lower");
        } else if (!(lo > 0.0)) {
            errs.push_back("C5: temperature data must be uniformly positive");
        }
    }

    if (graph_ok && c.phi0.all_finite_coeffs()) {
        // C6: initial order parameter compatible with the graph, checked
        // on the sampled datum
        auto p0 = c.phi0.sample(grid, 0.0);
        double m = mean_value(grid, p0);
        if (!graph.in_domain_interior(m))
            errs.push_back("C6: mean of phi0 must lie in the interior of the graph domain");
        bool inside = true;
        for (double v : p0)
            if (!graph.in_domain_closure(v)) { inside = false; break; }
        if (!inside)
            errs.push_back("C6: phi0 must stay inside the closure of the graph domain");

        // C7: admissible mean window for the eps stage (mollification is
        // mean preserving, so the window is checked against mean(phi0))
        if (c.mean_window) {
            double wlo = c.mean_window->first;
            double whi = c.mean_window->second;
            if (!(wlo <= whi)) errs.push_back("C7: mean_window must be ordered");
            else if (!graph.in_domain_interior(wlo) || !graph.in_domain_interior(whi))
                errs.push_back("C7: mean_window must lie inside the interior of the graph domain");
            else if (m < wlo || m > whi)
                errs.push_back("C7: mean of the eps-stage initial datum must lie in the admissible window");
        }

        // C8: final-stage override must carry the same mass
        if (c.phi0_eps_lambda) {
            if (!c.phi0_eps_lambda->all_finite_coeffs()) {
                errs.push_back("C8: final-stage initial datum coefficients must be finite");
            } else {
                auto pl = c.phi0_eps_lambda->sample(grid, 0.0);
                double mo = mean_value(grid, pl);
                if (std::abs(mo - m) > c.tol.mass)
                    errs.push_back("C8: final-stage initial datum must carry the same mean as the eps stage");
            }
        }
    } else if (!c.phi0.all_finite_coeffs()) {
        errs.push_back("C6: phi0 coefficients must be finite");
    }

    if (c.sweep.eps_rungs < 2) errs.push_back("sweep.eps_rungs must be at least 2");
    if (c.sweep.lambda_rungs < 2) errs.push_back("sweep.lambda_rungs must be at least 2");
    if (!(c.sweep.eps0 > 0.0 && c.sweep.eps0 < 1.0)) errs.push_back("sweep.eps0 must lie in (0,1)");
    if (!(c.sweep.lambda0 > 0.0 && c.sweep.lambda0 < 1.0)) errs.push_back("sweep.lambda0 must lie in (0,1)");

    return errs;
}

std::string canonical_json(const RunConfig& c) {
    ordered_json j;
    j["mode"] = mode_name(c.mode);
    j["coupling"] = coupling_name(c.coupling);
    j["epsilon"] = c.epsilon;
    j["lambda"] = c.lambda;
    j["T"] = c.T;
    j["tau"] = c.tau_resolved();
    j["grid"] = {{"dim", c.grid.dim}, {"nx", c.grid.nx}, {"ny", c.grid.ny}, {"nz", c.grid.nz},
                 {"Lx", c.grid.Lx}, {"Ly", c.grid.Ly}, {"Lz", c.grid.Lz}};
    j["kernel"] = {{"family", kernel_name(c.kernel.family)},
                   {"profile_scale", c.kernel.profile_scale},
                   {"storage", c.kernel.storage == Storage::Auto ? "auto"
                               : c.kernel.storage == Storage::Dense ? "dense" : "sparse"},
                   {"node_cap", c.kernel.node_cap}};
    j["beta"] = {{"graph", graph_name(c.beta.graph)}, {"exponent", c.beta.exponent}};
    j["pi"] = {{"slope", c.pi.slope}, {"coef", c.pi.coef}, {"deg", c.pi.deg}};
    j["heat_source"] = expr_json(c.f);
    j["theta_gamma"] = expr_json(c.theta_gamma);
    j["theta0"] = expr_json(c.theta0);
    j["phi0"] = expr_json(c.phi0);
    j["phi0_eps"] = {{"mollify", c.mollify_phi0}};
    if (c.mean_window)
        j["phi0_eps"]["mean_window"] = {c.mean_window->first, c.mean_window->second};
    if (c.phi0_eps_lambda) j["phi0_eps_lambda"] = expr_json(*c.phi0_eps_lambda);
    j["theta_bounds"] = {{"lower", c.theta_lower}, {"upper", c.theta_upper}};
    j["tolerances"] = {{"scalar_newton", c.tol.scalar_newton}, {"newton", c.tol.newton},
                       {"picard_scale", c.tol.picard_scale}, {"cg_rtol", c.tol.cg_rtol},
                       {"mass", c.tol.mass}, {"max_newton", c.tol.max_newton},
                       {"max_picard", c.tol.max_picard}, {"max_cg", c.tol.max_cg}};
    j["sweep"] = {{"eps0", c.sweep.eps0}, {"eps_rungs", c.sweep.eps_rungs},
                  {"lambda0", c.sweep.lambda0}, {"lambda_rungs", c.sweep.lambda_rungs}};
    j["output"] = {{"snapshots", c.output.snapshots}, {"snapshot_every", c.output.snapshot_every},
                   {"csv_node_cap", c.output.csv_node_cap}, {"svg", c.output.svg}};
    j["seed"] = c.seed;
    return j.dump();
}

std::string config_hash(const RunConfig& c) {
    std::string s = canonical_json(c);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace scpf
