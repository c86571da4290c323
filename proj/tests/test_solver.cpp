#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "scpf/config.hpp"
#include "scpf/coupling.hpp"
#include "scpf/grid.hpp"
#include "scpf/stencil.hpp"

using namespace scpf;

namespace {

// small well conditioned run shared by most cases
RunConfig base_cfg() {
    RunConfig c;
    c.mode = RunMode::EpsLambda;
    c.coupling = CouplingMode::PerStep;
    c.epsilon = 0.3;
    c.lambda = 0.2;
    c.T = 0.02;
    c.tau = 0.004;
    c.grid.nx = 8;
    c.grid.ny = 8;
    c.beta.graph = GraphId::Log;
    c.pi.slope = -1.0;
    c.f = Expr{0.2, {}};
    c.theta_gamma = Expr{1.0, {}};
    c.theta0 = Expr{1.0, {{0.1, 1, 0, 0, 0.0}}};
    c.phi0 = Expr{0.0, {{0.3, 1, 1, 0, 0.0}}};
    return c;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("constant data give a stationary run") {
    RunConfig c = base_cfg();
    c.f = Expr{0.0, {}};
    c.theta0 = Expr{1.1, {}};
    c.theta_gamma = Expr{1.1, {}};
    c.phi0 = Expr{0.2, {}};

    for (auto mode : {CouplingMode::PerStep, CouplingMode::GlobalPicard}) {
        c.coupling = mode;
        CoupledSolver solver(c);
        RunResult r = solver.run();
        const auto& last = r.traj.states.back();
        for (double v : last.phi) CHECK(v == doctest::Approx(0.2).epsilon(1e-9));
        for (double v : last.theta) CHECK(v == doctest::Approx(1.1).epsilon(1e-9));
        for (const auto& row : r.traj.ledger) {
            CHECK(row.grad_mu_sq < 1e-14);
            CHECK(row.phi_t_sq < 1e-14);
            CHECK(std::abs(row.balance_residual) < 1e-10);
            CHECK(row.mean_phi == doctest::Approx(0.2).epsilon(1e-12));
        }
        CHECK(r.stats.max_mean_drift < 1e-12);
        CHECK(r.stats.min_theta == doctest::Approx(1.1).epsilon(1e-9));
        if (mode == CouplingMode::GlobalPicard) CHECK(r.stats.picard.iters <= 3);
    }
}

TEST_CASE("per step and global picard land on the same trajectory") {
    RunConfig c = base_cfg();
    c.coupling = CouplingMode::PerStep;
    CoupledSolver s1(c);
    RunResult r1 = s1.run();

    c.coupling = CouplingMode::GlobalPicard;
    CoupledSolver s2(c);
    RunResult r2 = s2.run();
    REQUIRE(r2.stats.picard.iters > 0);

    CoupledSolver::Traj th1, th2;
    for (const auto& s : r1.traj.states) th1.push_back(s.theta);
    for (const auto& s : r2.traj.states) th2.push_back(s.theta);
    double d = s2.traj_metric(th1, th2);
    CAPTURE(d);
    CAPTURE(r2.stats.picard.tol_abs);
    CHECK(d <= 1000.0 * r2.stats.picard.tol_abs);
    CHECK(linf(r1.traj.states.back().phi, r2.traj.states.back().phi) < 1e-6);
}

TEST_CASE("composed map contracts to one fixed point from far guesses") {
    RunConfig c = base_cfg();
    c.coupling = CouplingMode::GlobalPicard;
    c.lambda = 0.5; // contraction regime
    CoupledSolver solver(c);
    RunResult r = solver.run_global_picard();
    const double tol = r.stats.picard.tol_abs;
    REQUIRE(tol > 0.0);

    auto iterate = [&](CoupledSolver::Traj guess) {
        for (int it = 0; it < c.tol.max_picard; ++it) {
            auto next = solver.apply_composed(guess);
            double d = solver.traj_metric(next, guess);
            guess = std::move(next);
            if (d <= tol) break;
        }
        return guess;
    };

    size_t slices = static_cast<size_t>(solver.steps()) + 1;
    CoupledSolver::Traj ga(slices, solver.theta_init());
    std::vector<double> bumped = solver.theta_init();
    for (auto& v : bumped) v *= 1.5;
    CoupledSolver::Traj gb(slices, bumped);

    auto la = iterate(ga);
    auto lb = iterate(gb);
    double gap = solver.traj_metric(la, lb);
    CAPTURE(gap);
    CHECK(gap <= 10.0 * tol);
}

TEST_CASE("stored states satisfy the summed enthalpy identity") {
    RunConfig c = base_cfg();
    c.f = Expr{0.3, {{0.2, 1, 0, 0, 0.5}}};
    c.theta_gamma = Expr{1.0, {{0.1, 0, 1, 0, 0.0}}};
    CoupledSolver solver(c);
    RunResult r = solver.run();
    const Grid& g = solver.grid();

    for (size_t n = 1; n < r.traj.states.size(); ++n) {
        const auto& cur = r.traj.states[n];
        const auto& prev = r.traj.states[n - 1];
        auto fn = c.f.sample(g, cur.t);
        auto tg = c.theta_gamma.sample(g, cur.t);
        double acc = 0.0;
        for (size_t i = 0; i < cur.u.size(); ++i)
            acc += g.cellvol *
                   (cur.u[i] - prev.u[i] + cur.phi[i] - prev.phi[i] - r.traj.tau * fn[i]);
        for (auto id : g.boundary_nodes) {
            auto ii = static_cast<size_t>(id);
            acc += r.traj.tau * g.trace_w[ii] * (cur.theta[ii] - tg[ii]);
        }
        CHECK(std::abs(acc) < 1e-8);
    }
}

TEST_CASE("stored diagnostic fields match their definitions") {
    RunConfig c = base_cfg();
    CoupledSolver solver(c);
    RunResult r = solver.run();
    for (const auto& s : r.traj.states) {
        auto xi = solver.yosida_field(s.phi);
        auto u = solver.transform_field(s.theta);
        CHECK(linf(xi, s.xi) < 1e-13);
        CHECK(linf(u, s.u) < 1e-13);
    }
    // ledger min theta column agrees with the states
    for (size_t n = 0; n < r.traj.states.size(); ++n) {
        const auto& th = r.traj.states[n].theta;
        double mn = *std::min_element(th.begin(), th.end());
        CHECK(r.traj.ledger[n].min_theta == doctest::Approx(mn).epsilon(1e-14));
        CHECK(mn > 0.0);
    }
}

TEST_CASE("indicator runs obey the slab bound up to the regularization") {
    RunConfig c = base_cfg();
    c.beta.graph = GraphId::Indicator;
    c.lambda = 0.1;
    c.phi0 = Expr{0.0, {{0.9, 1, 0, 0, 0.0}, {0.3, 0, 1, 0, 0.0}}};
    CoupledSolver solver(c);
    RunResult r = solver.run();
    for (size_t n = 1; n < r.traj.states.size(); ++n) {
        const auto& s = r.traj.states[n];
        for (size_t i = 0; i < s.phi.size(); ++i)
            CHECK(std::abs(s.phi[i]) <= 1.0 + c.lambda * std::abs(s.xi[i]) + 1e-12);
    }
}

TEST_CASE("phase sweep at frozen temperature dissipates the energy") {
    RunConfig c = base_cfg();
    c.mode = RunMode::Local;
    c.grid.nx = 16;
    c.grid.ny = 16;
    c.T = 0.02;
    c.tau = 0.002;
    c.lambda = 0.1;
    c.phi0 = Expr{0.0, {{0.2, 1, 0, 0, 0.0}, {0.15, 0, 2, 0, 0.0}}};
    CoupledSolver solver(c);

    size_t slices = static_cast<size_t>(solver.steps()) + 1;
    CoupledSolver::Traj theta(slices,
                              std::vector<double>(solver.theta_init().size(), 1.0));
    auto phi = solver.apply_phase(theta);
    REQUIRE(phi.size() == slices);

    const Grid& g = solver.grid();
    double m0 = mean_value(g, phi[0]);
    double prev = solver.total_energy(phi[0]);
    for (size_t n = 1; n < slices; ++n) {
        CHECK(std::abs(mean_value(g, phi[n]) - m0) < 1e-12);
        double en = solver.total_energy(phi[n]);
        CHECK(en <= prev + 1e-10 * std::max(1.0, std::abs(prev)));
        prev = en;
    }
    CHECK(prev < solver.total_energy(phi[0]));
}

TEST_CASE("initial datum staging") {
    RunConfig c = base_cfg();
    c.phi0 = Expr{0.1, {{0.4, 2, 1, 0, 0.0}}};
    Grid g = make_grid(2, 16, 16, 1, 1.0, 1.0, 0.0);
    auto raw = c.phi0.sample(g, 0.0);

    SUBCASE("local mode ignores the mollifier") {
        c.mode = RunMode::Local;
        c.mollify_phi0 = true;
        auto out = staged_phi0(c, g);
        CHECK(linf(out, raw) == 0.0);
    }
    SUBCASE("mollified datum keeps the mean and loses roughness") {
        c.mode = RunMode::Eps;
        c.mollify_phi0 = true;
        c.epsilon = 0.4;
        auto smooth = staged_phi0(c, g);
        CHECK(mean_value(g, smooth) == doctest::Approx(mean_value(g, raw)).epsilon(1e-12));
        CHECK(dirichlet_energy(g, smooth) < dirichlet_energy(g, raw));

        // weaker smoothing at smaller interaction length
        c.epsilon = 0.1;
        auto mild = staged_phi0(c, g);
        CHECK(dirichlet_energy(g, mild) > dirichlet_energy(g, smooth));
        CHECK(dirichlet_energy(g, mild) < dirichlet_energy(g, raw));
    }
    SUBCASE("final stage override wins") {
        c.mode = RunMode::EpsLambda;
        c.mollify_phi0 = true;
        c.phi0_eps_lambda = Expr{0.1, {{0.2, 1, 0, 0, 0.0}}};
        auto out = staged_phi0(c, g);
        auto want = c.phi0_eps_lambda->sample(g, 0.0);
        CHECK(linf(out, want) == 0.0);
    }
}
