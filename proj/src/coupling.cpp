#include "scpf/coupling.hpp"

#include <cmath>

#include "scpf/errors.hpp"
#include "scpf/stencil.hpp"

namespace scpf {

std::vector<double> staged_phi0(const RunConfig& cfg, const Grid& g) {
    auto phi0 = cfg.phi0.sample(g, 0.0);
    bool eps_stage = cfg.mode != RunMode::Local;
    if (eps_stage && cfg.mollify_phi0) {
        // one implicit smoothing pass at length scale ~ eps/2; mean preserving
        double s = cfg.epsilon * cfg.epsilon / 8.0;
        std::vector<double> diag = neg_laplacian_diagonal(g);
        for (auto& d : diag) d = 1.0 + s * d;
        LinOp A = [&](const double* in, double* out) {
            laplacian_neumann(g, in, out);
            for (std::int64_t i = 0; i < g.nn; ++i) out[i] = in[i] - s * out[i];
        };
        std::vector<double> sm(phi0.size(), 0.0);
        auto r = cg_solve(g.nn, A, phi0.data(), sm.data(), 1e-12, 20000, &diag);
        if (!r.converged)
            throw NumericsError("mollification solve did not converge");
        phi0 = sm;
    }
    if (cfg.mode == RunMode::EpsLambda && cfg.phi0_eps_lambda)
        phi0 = cfg.phi0_eps_lambda->sample(g, 0.0);
    return phi0;
}

CoupledSolver::CoupledSolver(const RunConfig& cfg)
    : cfg_(cfg),
      g_(make_grid(cfg.grid.dim, cfg.grid.nx, cfg.grid.ny, cfg.grid.nz,
                   cfg.grid.Lx, cfg.grid.Ly, cfg.grid.Lz)),
      graph_(MonotoneGraph::make(cfg.beta.graph, cfg.beta.exponent)),
      fam_(KernelFamily::make(cfg.kernel.family, cfg.grid.dim, cfg.kernel.profile_scale)),
      tau_(cfg.tau_resolved()),
      N_(cfg.steps()) {
    if (cfg_.mode == RunMode::Local) {
        B_.g = &g_;
        B_.local = true;
    } else {
        nl_.emplace(assemble_nonlocal(g_, fam_, cfg_.epsilon, cfg_.kernel.storage,
                                      cfg_.kernel.node_cap));
        B_.g = &g_;
        B_.nl = &*nl_;
        B_.local = false;
    }

    phi0_ = staged_phi0(cfg_, g_);
    theta0_ = cfg_.theta0.sample(g_, 0.0);

    f_n_.resize(static_cast<size_t>(N_) + 1);
    thgam_n_.resize(static_cast<size_t>(N_) + 1);
    for (int n = 0; n <= N_; ++n) {
        double t = n * tau_;
        f_n_[static_cast<size_t>(n)] = cfg_.f.sample(g_, t);
        thgam_n_[static_cast<size_t>(n)] = cfg_.theta_gamma.sample(g_, t);
    }

    phi_step_.emplace(g_, B_, graph_, cfg_.pi, cfg_.lambda, tau_, cfg_.tol);
    theta_step_.emplace(g_, cfg_.lambda, tau_, cfg_.tol);
    u0_ = theta_step_->transform(theta0_);
}

std::vector<double> CoupledSolver::yosida_field(const std::vector<double>& phi) const {
    std::vector<double> xi(phi.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(phi.size()); ++i)
        xi[static_cast<size_t>(i)] = graph_.yosida(cfg_.lambda, phi[static_cast<size_t>(i)]);
    return xi;
}

std::vector<double> CoupledSolver::transform_field(const std::vector<double>& theta) const {
    return theta_step_->transform(theta);
}

std::vector<double> CoupledSolver::initial_mu(const std::vector<double>& theta) const {
    const std::int64_t nn = g_.nn;
    std::vector<double> lap(phi0_.size()), b(phi0_.size()), mu(phi0_.size());
    laplacian_neumann(g_, phi0_.data(), lap.data());
    B_.apply(phi0_.data(), b.data());
    for (std::int64_t i = 0; i < nn; ++i) {
        auto ii = static_cast<size_t>(i);
        mu[ii] = -cfg_.lambda * lap[ii] + b[ii] + graph_.yosida(cfg_.lambda, phi0_[ii]) +
                 cfg_.pi.eval(phi0_[ii]) - theta[ii];
    }
    return mu;
}

CoupledSolver::Traj CoupledSolver::apply_phase(const Traj& theta, Traj* mu_out, RunStats* stats) {
    Traj phi(static_cast<size_t>(N_) + 1);
    Traj mu(static_cast<size_t>(N_) + 1);
    phi[0] = phi0_;
    mu[0] = initial_mu(theta[0]);

    std::vector<double> phi_cur = phi0_;
    std::vector<double> mu_cur = mu[0];
    for (int n = 1; n <= N_; ++n) {
        StepStats st;
        phi_step_->step(phi[static_cast<size_t>(n) - 1], theta[static_cast<size_t>(n)],
                        phi_cur, mu_cur, st, n);
        phi[static_cast<size_t>(n)] = phi_cur;
        mu[static_cast<size_t>(n)] = mu_cur;
        if (stats) {
            stats->total_newton_phi += st.newton_iters;
            stats->total_cg += st.cg_iters;
            if (st.split_step) ++stats->split_steps;
        }
    }
    if (mu_out) *mu_out = std::move(mu);
    return phi;
}

CoupledSolver::Traj CoupledSolver::apply_temperature(const Traj& phi, RunStats* stats) {
    Traj theta(static_cast<size_t>(N_) + 1);
    theta[0] = theta0_;
    std::vector<double> u = u0_;
    std::vector<double> th = theta0_;
    std::vector<double> dphi(phi0_.size());
    for (int n = 1; n <= N_; ++n) {
        for (size_t i = 0; i < dphi.size(); ++i)
            dphi[i] = phi[static_cast<size_t>(n)][i] - phi[static_cast<size_t>(n) - 1][i];
        StepStats st;
        theta_step_->step(u, dphi, f_n_[static_cast<size_t>(n)], thgam_n_[static_cast<size_t>(n)],
                          th, st, n);
        theta[static_cast<size_t>(n)] = th;
        u = theta_step_->transform(th);
        if (stats) {
            stats->total_newton_theta += st.newton_iters;
            stats->total_cg += st.cg_iters;
        }
    }
    return theta;
}

CoupledSolver::Traj CoupledSolver::apply_composed(const Traj& theta, RunStats* stats) {
    auto phi = apply_phase(theta, nullptr, stats);
    return apply_temperature(phi, stats);
}

double CoupledSolver::metric_weight_rate() const {
    return 2.0 * cfg_.pi.lipschitz() + 3.0 / cfg_.lambda;
}

double CoupledSolver::traj_metric(const Traj& a, const Traj& b) const {
    const double L = metric_weight_rate();
    double s = 0.0;
    for (int n = 1; n <= N_; ++n) {
        double acc = 0.0;
        const auto& x = a[static_cast<size_t>(n)];
        const auto& y = b[static_cast<size_t>(n)];
        for (size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - y[i];
            acc += d * d;
        }
        s += tau_ * std::exp(-L * n * tau_) * g_.cellvol * acc;
    }
    return s;
}

double CoupledSolver::traj_metric_unweighted(const Traj& a, const Traj& b) const {
    double s = 0.0;
    for (int n = 1; n <= N_; ++n) {
        double acc = 0.0;
        const auto& x = a[static_cast<size_t>(n)];
        const auto& y = b[static_cast<size_t>(n)];
        for (size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - y[i];
            acc += d * d;
        }
        s += tau_ * g_.cellvol * acc;
    }
    return s;
}

RunResult CoupledSolver::run() {
    return cfg_.coupling == CouplingMode::GlobalPicard ? run_global_picard() : run_per_step();
}

RunResult CoupledSolver::run_global_picard() {
    RunStats stats;
    Traj theta(static_cast<size_t>(N_) + 1, theta0_); // constant-in-time start
    Traj phi, mu;

    double tol_abs = 0.0;
    double prev_d = 0.0;
    bool converged = false;
    for (int k = 1; k <= cfg_.tol.max_picard; ++k) {
        phi = apply_phase(theta, &mu, &stats);
        Traj theta_new = apply_temperature(phi, &stats);
        double d = traj_metric(theta_new, theta);
        stats.picard.dists.push_back(d);
        if (k > 1 && prev_d > 0.0) stats.picard.ratios.push_back(d / prev_d);
        prev_d = d;
        if (k == 1) {
            Traj zero(static_cast<size_t>(N_) + 1,
                      std::vector<double>(theta0_.size(), 0.0));
            double scale = traj_metric(theta_new, zero);
            tol_abs = cfg_.tol.picard_scale * std::max(1.0, scale);
            stats.picard.tol_abs = tol_abs;
        }
        stats.picard.final_dist = d;
        stats.picard.final_dist_unweighted = traj_metric_unweighted(theta_new, theta);
        theta = std::move(theta_new);
        stats.picard.iters = k;
        if (d <= tol_abs) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NumericsError("picard iteration did not converge within the cap");

    RunResult out;
    out.traj = assemble_trajectory(theta, phi, mu);
    out.stats = stats;
    fill_ledger(out.traj, out.stats);
    return out;
}

RunResult CoupledSolver::run_per_step() {
    RunStats stats;
    stats.per_step = true;

    Traj theta(static_cast<size_t>(N_) + 1), phi(static_cast<size_t>(N_) + 1),
        mu(static_cast<size_t>(N_) + 1);
    theta[0] = theta0_;
    phi[0] = phi0_;
    mu[0] = initial_mu(theta0_);

    std::vector<double> u = u0_;
    std::vector<double> phi_prev = phi0_;
    std::vector<double> dphi(phi0_.size());
    const int max_inner = 60;

    for (int n = 1; n <= N_; ++n) {
        double ref = std::max(1.0, norm_h(g_, theta[static_cast<size_t>(n) - 1]));
        std::vector<double> th_it = theta[static_cast<size_t>(n) - 1];
        std::vector<double> phi_it = phi_prev;
        std::vector<double> mu_it = mu[static_cast<size_t>(n) - 1];
        int sweeps = 0;
        bool done = false;
        for (int j = 0; j < max_inner; ++j) {
            ++sweeps;
            StepStats stp;
            phi_step_->step(phi_prev, th_it, phi_it, mu_it, stp, n);
            stats.total_newton_phi += stp.newton_iters;
            stats.total_cg += stp.cg_iters;
            if (stp.split_step) ++stats.split_steps;

            for (size_t i = 0; i < dphi.size(); ++i) dphi[i] = phi_it[i] - phi_prev[i];
            std::vector<double> th_new = th_it;
            StepStats stt;
            theta_step_->step(u, dphi, f_n_[static_cast<size_t>(n)],
                              thgam_n_[static_cast<size_t>(n)], th_new, stt, n);
            stats.total_newton_theta += stt.newton_iters;
            stats.total_cg += stt.cg_iters;

            double diff = 0.0;
            for (size_t i = 0; i < th_new.size(); ++i) {
                double d = th_new[i] - th_it[i];
                diff += d * d;
            }
            diff = std::sqrt(g_.cellvol * diff);
            th_it.swap(th_new);
            if (diff <= cfg_.tol.picard_scale * ref) {
                done = true;
                break;
            }
        }
        if (!done)
            throw NumericsError("per-step coupling sweep did not converge", n);
        stats.max_inner_sweeps = std::max(stats.max_inner_sweeps, sweeps);

        theta[static_cast<size_t>(n)] = th_it;
        phi[static_cast<size_t>(n)] = phi_it;
        mu[static_cast<size_t>(n)] = mu_it;
        u = theta_step_->transform(th_it);
        phi_prev = phi_it;
    }

    RunResult out;
    out.traj = assemble_trajectory(theta, phi, mu);
    out.stats = stats;
    fill_ledger(out.traj, out.stats);
    return out;
}

Trajectory CoupledSolver::assemble_trajectory(const Traj& theta, const Traj& phi,
                                              const Traj& mu) const {
    Trajectory t;
    t.tau = tau_;
    t.states.resize(static_cast<size_t>(N_) + 1);
    for (int n = 0; n <= N_; ++n) {
        auto& s = t.states[static_cast<size_t>(n)];
        s.t = n * tau_;
        s.theta = theta[static_cast<size_t>(n)];
        s.phi = phi[static_cast<size_t>(n)];
        s.mu = mu[static_cast<size_t>(n)];
        s.xi = yosida_field(s.phi);
        s.u = theta_step_->transform(s.theta);
    }
    return t;
}

double CoupledSolver::total_energy(const std::vector<double>& phi) const {
    double e = 0.5 * cfg_.lambda * dirichlet_energy(g_, phi);
    e += B_.energy_slot(phi);
    double pot = 0.0;
    for (double v : phi)
        pot += graph_.moreau(cfg_.lambda, v) + cfg_.pi.antiderivative(v);
    e += g_.cellvol * pot;
    return e;
}

void CoupledSolver::fill_ledger(Trajectory& traj, RunStats& stats) const {
    const int N = static_cast<int>(traj.states.size()) - 1;
    traj.ledger.assign(static_cast<size_t>(N) + 1, LedgerRow{});

    double mean0 = mean_value(g_, traj.states[0].phi);
    double diss_sum = 0.0;
    double work_sum = 0.0;
    double e0 = total_energy(traj.states[0].phi);

    stats.max_mean_drift = 0.0;
    stats.min_theta = traj.states[0].theta.empty() ? 0.0 : traj.states[0].theta[0];

    for (int n = 0; n <= N; ++n) {
        const auto& s = traj.states[static_cast<size_t>(n)];
        auto& row = traj.ledger[static_cast<size_t>(n)];
        row.step = n;
        row.t = s.t;
        row.energy_grad = 0.5 * cfg_.lambda * dirichlet_energy(g_, s.phi);
        row.energy_interaction = B_.energy_slot(s.phi);
        double pot = 0.0;
        for (double v : s.phi)
            pot += graph_.moreau(cfg_.lambda, v) + cfg_.pi.antiderivative(v);
        row.energy_pot = g_.cellvol * pot;
        row.energy_total = row.energy_grad + row.energy_interaction + row.energy_pot;
        row.theta_l2 = norm_h(g_, s.theta);
        row.mu_l2 = norm_h(g_, s.mu);
        row.xi_l2 = norm_h(g_, s.xi);
        double mn = s.theta[0];
        for (double v : s.theta) mn = std::min(mn, v);
        row.min_theta = mn;
        stats.min_theta = n == 0 ? mn : std::min(stats.min_theta, mn);
        row.mean_phi = mean_value(g_, s.phi);
        stats.max_mean_drift = std::max(stats.max_mean_drift, std::abs(row.mean_phi - mean0));

        if (n > 0) {
            const auto& p = traj.states[static_cast<size_t>(n) - 1];
            row.grad_mu_sq = dirichlet_energy(g_, s.mu);
            double pts = 0.0, work = 0.0;
            for (size_t i = 0; i < s.phi.size(); ++i) {
                double d = (s.phi[i] - p.phi[i]) / traj.tau;
                pts += d * d;
                work += s.theta[i] * (s.phi[i] - p.phi[i]);
            }
            row.phi_t_sq = g_.cellvol * pts;
            diss_sum += traj.tau * (row.grad_mu_sq + row.phi_t_sq);
            work_sum += g_.cellvol * work;
            row.balance_residual = diss_sum + row.energy_total - e0 - work_sum;
        }
    }
    stats.final_balance_residual = traj.ledger.back().balance_residual;
}

} // namespace scpf
