#include "scpf/subproblems.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "scpf/errors.hpp"

namespace scpf {

void InteractionOp::apply(const double* x, double* y) const {
    if (local) {
        laplacian_neumann(*g, x, y);
        for (std::int64_t i = 0; i < g->nn; ++i) y[i] = -y[i];
    } else {
        nl->apply(x, y);
    }
}

std::vector<double> InteractionOp::apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    apply(x.data(), y.data());
    return y;
}

double InteractionOp::energy_slot(const std::vector<double>& phi) const {
    if (local) return 0.5 * dirichlet_energy(*g, phi);
    return nl->energy(phi);
}

std::vector<double> InteractionOp::diagonal() const {
    if (local) return neg_laplacian_diagonal(*g);
    return nl->rowsum;
}

void InteractionOp::add_dense(std::vector<double>& m) const {
    const std::int64_t nn = g->nn;
    if (local) {
        // column-by-column through the stencil; nn is small on this path
        std::vector<double> e(static_cast<size_t>(nn), 0.0), col(static_cast<size_t>(nn));
        for (std::int64_t j = 0; j < nn; ++j) {
            e[static_cast<size_t>(j)] = 1.0;
            laplacian_neumann(*g, e.data(), col.data());
            for (std::int64_t i = 0; i < nn; ++i)
                m[static_cast<size_t>(i) * nn + j] += -col[static_cast<size_t>(i)];
            e[static_cast<size_t>(j)] = 0.0;
        }
    } else {
        for (std::int64_t i = 0; i < nn; ++i) {
            m[static_cast<size_t>(i) * nn + i] += nl->rowsum[static_cast<size_t>(i)];
            if (nl->dense) {
                const double* row = &nl->wd[static_cast<size_t>(i) * nn];
                for (std::int64_t j = 0; j < nn; ++j)
                    m[static_cast<size_t>(i) * nn + j] -= row[j];
            } else {
                for (std::int64_t p = nl->rowptr[static_cast<size_t>(i)];
                     p < nl->rowptr[static_cast<size_t>(i) + 1]; ++p)
                    m[static_cast<size_t>(i) * nn + nl->colidx[static_cast<size_t>(p)]] -=
                        nl->ws[static_cast<size_t>(p)];
            }
        }
    }
}

struct PhiStepper::Impl {
    const Grid* g;
    const InteractionOp* B;
    MonotoneGraph graph;
    PiSpec pi;
    double lambda;
    Tolerances tol;
    bool direct;

    std::vector<double> b_diag;      // interaction diagonal for preconditioning
    std::vector<double> neg_lap_diag;
    std::vector<double> lap_dense;   // row-major laplacian matrix, direct path only
    std::vector<double> bop_dense;   // interaction matrix, direct path only
    InvNeumann inv0;

    Impl(const Grid& grid, const InteractionOp& bop, const MonotoneGraph& gr,
         const PiSpec& p, double lam, const Tolerances& t, bool use_direct)
        : g(&grid), B(&bop), graph(gr), pi(p), lambda(lam), tol(t), direct(use_direct),
          b_diag(bop.diagonal()), neg_lap_diag(neg_laplacian_diagonal(grid)), inv0(grid) {
        inv0.rtol = 1e-13;
        inv0.maxit = t.max_cg;
        if (direct) {
            const std::int64_t nn = g->nn;
            lap_dense.assign(static_cast<size_t>(nn) * nn, 0.0);
            std::vector<double> e(static_cast<size_t>(nn), 0.0), col(static_cast<size_t>(nn));
            for (std::int64_t j = 0; j < nn; ++j) {
                e[static_cast<size_t>(j)] = 1.0;
                laplacian_neumann(*g, e.data(), col.data());
                for (std::int64_t i = 0; i < nn; ++i)
                    lap_dense[static_cast<size_t>(i) * nn + j] = col[static_cast<size_t>(i)];
                e[static_cast<size_t>(j)] = 0.0;
            }
            bop_dense.assign(static_cast<size_t>(nn) * nn, 0.0);
            bop.add_dense(bop_dense);
        }
    }

    // residuals of the coupled (phi, mu) system at the current iterate
    void residuals(double tau, const std::vector<double>& phi_old,
                   const std::vector<double>& theta, const std::vector<double>& phi,
                   const std::vector<double>& mu, std::vector<double>& r1,
                   std::vector<double>& r2) const {
        const std::int64_t nn = g->nn;
        std::vector<double> lap_mu(static_cast<size_t>(nn)), lap_phi(static_cast<size_t>(nn));
        std::vector<double> bphi(static_cast<size_t>(nn));
        laplacian_neumann(*g, mu.data(), lap_mu.data());
        laplacian_neumann(*g, phi.data(), lap_phi.data());
        B->apply(phi.data(), bphi.data());
        r1.resize(static_cast<size_t>(nn));
        r2.resize(static_cast<size_t>(nn));
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            double dphi = (phi[ii] - phi_old[ii]) / tau;
            r1[ii] = dphi - lap_mu[ii];
            double rhs = dphi - lambda * lap_phi[ii] + bphi[ii] +
                         graph.yosida(lambda, phi[ii]) + pi.eval(phi[ii]) - theta[ii];
            r2[ii] = mu[ii] - rhs;
        }
    }

    double res_norm(const std::vector<double>& r1, const std::vector<double>& r2) const {
        return std::sqrt(dot_h(*g, r1, r1) + dot_h(*g, r2, r2));
    }

    // one Newton solve at step size tau; returns false if it did not converge
    bool newton(double tau, const std::vector<double>& phi_old, const std::vector<double>& theta,
                std::vector<double>& phi, std::vector<double>& mu, StepStats& st) {
        const std::int64_t nn = g->nn;
        std::vector<double> r1, r2, dvec(static_cast<size_t>(nn));
        residuals(tau, phi_old, theta, phi, mu, r1, r2);
        double res = res_norm(r1, r2);

        for (int it = 0; it < tol.max_newton; ++it) {
            if (res <= tol.newton) return true;
            ++st.newton_iters;
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < nn; ++i) {
                auto ii = static_cast<size_t>(i);
                dvec[ii] = graph.yosida_prime(lambda, phi[ii]) + pi.prime(phi[ii]);
            }

            std::vector<double> dphi(static_cast<size_t>(nn)), dmu(static_cast<size_t>(nn));
            if (direct)
                solve_direct(tau, dvec, r1, r2, dphi, dmu);
            else
                solve_schur(tau, dvec, r1, r2, dphi, dmu, st);

            // backtracking on the residual norm
            double alpha = 1.0;
            std::vector<double> phi_try(static_cast<size_t>(nn)), mu_try(static_cast<size_t>(nn));
            std::vector<double> r1t, r2t;
            bool accepted = false;
            for (int ls = 0; ls < 10; ++ls) {
                for (std::int64_t i = 0; i < nn; ++i) {
                    auto ii = static_cast<size_t>(i);
                    phi_try[ii] = phi[ii] + alpha * dphi[ii];
                    mu_try[ii] = mu[ii] + alpha * dmu[ii];
                }
                residuals(tau, phi_old, theta, phi_try, mu_try, r1t, r2t);
                double res_try = res_norm(r1t, r2t);
                if (res_try <= res * (1.0 - 1e-4 * alpha) || res_try <= tol.newton) {
                    phi.swap(phi_try);
                    mu.swap(mu_try);
                    r1.swap(r1t);
                    r2.swap(r2t);
                    res = res_try;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return false;
        }
        return res <= tol.newton;
    }

    void solve_direct(double tau, const std::vector<double>& dvec,
                      const std::vector<double>& r1, const std::vector<double>& r2,
                      std::vector<double>& dphi, std::vector<double>& dmu) const {
        const std::int64_t nn = g->nn;
        const auto n = static_cast<Eigen::Index>(nn);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            M(i, i) = 1.0 / tau;
            for (Eigen::Index j = 0; j < n; ++j) {
                double lap = lap_dense[static_cast<size_t>(i) * nn + j];
                M(i, n + j) = -lap;
                // A_phi = I/tau - lambda lap + B + diag(dvec)
                double a = -lambda * lap + bop_dense[static_cast<size_t>(i) * nn + j];
                if (i == j) a += 1.0 / tau + dvec[static_cast<size_t>(i)];
                M(n + i, j) = -a;
            }
            M(n + i, n + i) = 1.0;
        }
        Eigen::VectorXd rhs(2 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            rhs(i) = -r1[static_cast<size_t>(i)];
            rhs(n + i) = -r2[static_cast<size_t>(i)];
        }
        Eigen::VectorXd sol = M.partialPivLu().solve(rhs);
        dphi.resize(static_cast<size_t>(nn));
        dmu.resize(static_cast<size_t>(nn));
        for (Eigen::Index i = 0; i < n; ++i) {
            dphi[static_cast<size_t>(i)] = sol(i);
            dmu[static_cast<size_t>(i)] = sol(n + i);
        }
    }

    void apply_aphi(double tau, const std::vector<double>& dvec, const double* v, double* out) const {
        const std::int64_t nn = g->nn;
        std::vector<double> lap(static_cast<size_t>(nn)), bv(static_cast<size_t>(nn));
        laplacian_neumann(*g, v, lap.data());
        B->apply(v, bv.data());
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            out[ii] = v[ii] / tau - lambda * lap[ii] + bv[ii] + dvec[ii] * v[ii];
        }
    }

    // mu eliminated: delta_phi solves (I/tau - lap A_phi) d = b with
    // b = -r1 - lap r2. The mean rides along explicitly, the mean-zero
    // part goes through CG on N(.)/tau + P A_phi P, SPD on that subspace.
    void solve_schur(double tau, const std::vector<double>& dvec,
                     const std::vector<double>& r1, const std::vector<double>& r2,
                     std::vector<double>& dphi, std::vector<double>& dmu, StepStats& st) {
        const std::int64_t nn = g->nn;
        std::vector<double> b(static_cast<size_t>(nn)), lap_r2(static_cast<size_t>(nn));
        laplacian_neumann(*g, r2.data(), lap_r2.data());
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            b[ii] = -r1[ii] - lap_r2[ii];
        }
        double mbar = tau * mean_value(*g, b);

        std::vector<double> lap_d(static_cast<size_t>(nn));
        laplacian_neumann(*g, dvec.data(), lap_d.data());
        std::vector<double> btil(static_cast<size_t>(nn));
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            btil[ii] = b[ii] - mbar / tau + mbar * lap_d[ii];
        }
        double mresid = mean_value(*g, btil);
        for (auto& x : btil) x -= mresid; // roundoff cleanup

        auto rhs = inv0.apply(btil);

        LinOp Mop = [&](const double* v, double* out) {
            std::vector<double> av(static_cast<size_t>(nn));
            apply_aphi(tau, dvec, v, av.data());
            double m = mean_value(*g, av);
            std::vector<double> vin(v, v + nn);
            auto nv = inv0.apply(vin);
            for (std::int64_t i = 0; i < nn; ++i) {
                auto ii = static_cast<size_t>(i);
                out[ii] = nv[ii] / tau + av[ii] - m;
            }
        };

        std::vector<double> pd(static_cast<size_t>(nn));
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            pd[ii] = 1.0 / tau + lambda * neg_lap_diag[ii] + b_diag[ii] + dvec[ii];
            if (pd[ii] <= 0.0) pd[ii] = 1.0 / tau;
        }
        // projected Jacobi keeps every Krylov vector mean-free, which the
        // inner zero-mean inverse insists on
        LinOp Pjac = [&](const double* r, double* z) {
            for (std::int64_t i = 0; i < nn; ++i) {
                auto ii = static_cast<size_t>(i);
                z[ii] = r[ii] / pd[ii];
            }
            double m = mean_value(*g, std::vector<double>(z, z + nn));
            for (std::int64_t i = 0; i < nn; ++i) z[i] -= m;
        };

        std::vector<double> d0(static_cast<size_t>(nn), 0.0);
        auto cgres = cg_solve(nn, Mop, rhs.data(), d0.data(), tol.cg_rtol * 0.1,
                              tol.max_cg, nullptr, &Pjac);
        if (!cgres.converged)
            throw NumericsError("phase step: schur cg did not converge");
        st.cg_iters += cgres.iters;
        {
            double m = mean_value(*g, d0);
            for (auto& x : d0) x -= m;
        }

        dphi.resize(static_cast<size_t>(nn));
        for (std::int64_t i = 0; i < nn; ++i)
            dphi[static_cast<size_t>(i)] = d0[static_cast<size_t>(i)] + mbar;

        dmu.resize(static_cast<size_t>(nn));
        apply_aphi(tau, dvec, dphi.data(), dmu.data());
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            dmu[ii] -= r2[ii];
        }
    }
};

PhiStepper::PhiStepper(const Grid& g, const InteractionOp& B, const MonotoneGraph& graph,
                       const PiSpec& pi, double lambda, double tau, const Tolerances& tol,
                       std::int64_t direct_cap)
    : impl_(std::make_unique<Impl>(g, B, graph, pi, lambda, tol, g.nn <= direct_cap)),
      tau_(tau) {}

PhiStepper::~PhiStepper() = default;

void PhiStepper::step(const std::vector<double>& phi_old, const std::vector<double>& theta,
                      std::vector<double>& phi, std::vector<double>& mu, StepStats& st,
                      int step_index) {
    if (impl_->newton(tau_, phi_old, theta, phi, mu, st)) return;

    // retry once as two half steps before giving up
    st.split_step = true;
    std::vector<double> phi_mid = phi_old, mu_mid = mu;
    std::vector<double> phi_a = phi_old;
    if (impl_->newton(0.5 * tau_, phi_a, theta, phi_mid, mu_mid, st)) {
        std::vector<double> phi_b = phi_mid;
        if (impl_->newton(0.5 * tau_, phi_b, theta, phi_mid, mu_mid, st)) {
            phi = phi_mid;
            mu = mu_mid;
            return;
        }
    }
    throw NumericsError("phase step: newton failed even after halving the step", step_index);
}

ThetaStepper::ThetaStepper(const Grid& g, double lambda, double tau, const Tolerances& tol)
    : g_(&g), lam_(lambda), tau_(tau), tol_(tol), neg_lap_diag_(neg_laplacian_diagonal(g)) {}

std::vector<double> ThetaStepper::transform(const std::vector<double>& theta) const {
    LogRegularization L(lam_);
    std::vector<double> u(theta.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(theta.size()); ++i)
        u[static_cast<size_t>(i)] = L.full_op(theta[static_cast<size_t>(i)]);
    return u;
}

void ThetaStepper::step(const std::vector<double>& u_old, const std::vector<double>& dphi,
                        const std::vector<double>& f, const std::vector<double>& theta_gamma,
                        std::vector<double>& theta, StepStats& st, int step_index) const {
    const Grid& g = *g_;
    const std::int64_t nn = g.nn;
    const double cv = g.cellvol;
    LogRegularization L(lam_);

    std::vector<double> Ln(static_cast<size_t>(nn)), Lnp(static_cast<size_t>(nn));
    std::vector<double> F(static_cast<size_t>(nn)), lap(static_cast<size_t>(nn));

    auto eval_residual = [&](const std::vector<double>& th, std::vector<double>& out) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            double j = L.resolvent(th[ii]);
            Ln[ii] = lam_ * th[ii] + (th[ii] - j) / lam_;
            Lnp[ii] = lam_ + 1.0 / (j + lam_);
        }
        laplacian_neumann(g, th.data(), lap.data());
        out.resize(static_cast<size_t>(nn));
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            out[ii] = cv * ((Ln[ii] - u_old[ii]) / tau_ + dphi[ii] / tau_ - lap[ii] - f[ii]) +
                      g.trace_w[ii] * (th[ii] - theta_gamma[ii]);
        }
    };

    auto res_norm = [&](const std::vector<double>& out) {
        double s = 0.0;
        for (double x : out) s += x * x;
        return std::sqrt(s / cv);
    };

    eval_residual(theta, F);
    double res = res_norm(F);

    bool done = res <= tol_.newton;
    for (int it = 0; it < tol_.max_newton && !done; ++it) {
        // Lnp is in sync with theta after eval_residual
        std::vector<double> diag(static_cast<size_t>(nn));
        for (std::int64_t i = 0; i < nn; ++i) {
            auto ii = static_cast<size_t>(i);
            diag[ii] = cv * (Lnp[ii] / tau_ + neg_lap_diag_[ii]) + g.trace_w[ii];
        }
        std::vector<double> lnp_snapshot = Lnp;
        LinOp J = [&](const double* v, double* out) {
            std::vector<double> lv(static_cast<size_t>(nn));
            laplacian_neumann(g, v, lv.data());
            for (std::int64_t i = 0; i < nn; ++i) {
                auto ii = static_cast<size_t>(i);
                out[ii] = cv * (lnp_snapshot[ii] * v[ii] / tau_ - lv[ii]) + g.trace_w[ii] * v[ii];
            }
        };
        std::vector<double> rhs(static_cast<size_t>(nn));
        for (std::int64_t i = 0; i < nn; ++i) rhs[static_cast<size_t>(i)] = -F[static_cast<size_t>(i)];
        std::vector<double> delta(static_cast<size_t>(nn), 0.0);
        auto cgres = cg_solve(nn, J, rhs.data(), delta.data(), tol_.cg_rtol, tol_.max_cg, &diag);
        if (!cgres.converged)
            throw NumericsError("temperature step: cg did not converge", step_index);
        st.cg_iters += cgres.iters;
        ++st.newton_iters;

        double alpha = 1.0;
        std::vector<double> theta_try(static_cast<size_t>(nn)), Ft;
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls) {
            for (std::int64_t i = 0; i < nn; ++i) {
                auto ii = static_cast<size_t>(i);
                theta_try[ii] = theta[ii] + alpha * delta[ii];
            }
            eval_residual(theta_try, Ft);
            double res_try = res_norm(Ft);
            if (res_try <= res * (1.0 - 1e-4 * alpha) || res_try <= tol_.newton) {
                theta.swap(theta_try);
                F.swap(Ft);
                res = res_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NumericsError("temperature step: newton stalled", step_index);
        done = res <= tol_.newton;
    }
    if (!done)
        throw NumericsError("temperature step: newton did not reach tolerance", step_index);

    double mn = theta[0];
    for (double x : theta) mn = std::min(mn, x);
    if (!(mn > 0.0))
        throw NumericsError("temperature lost positivity; the time step is too large for this data",
                            step_index);
}

} // namespace scpf
