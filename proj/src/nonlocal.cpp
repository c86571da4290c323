#include "scpf/nonlocal.hpp"

#include <cmath>
#include <stdexcept>

namespace scpf {

namespace {

// squared distance between nodes via coordinate deltas; symmetric in
// (i, j) bitwise because the squares kill the sign
inline double dist2(const Grid& g, std::int64_t a, std::int64_t b) {
    int ai, aj, ak, bi, bj, bk;
    g.decode(a, ai, aj, ak);
    g.decode(b, bi, bj, bk);
    double dx = (ai - bi) * g.h[0];
    double dy = (aj - bj) * g.h[1];
    double s = dx * dx + dy * dy;
    if (g.dim == 3) {
        double dz = (ak - bk) * g.h[2];
        s += dz * dz;
    }
    return s;
}

} // namespace

NonlocalOperator assemble_nonlocal(const Grid& g, const KernelFamily& fam, double eps,
                                   Storage storage, std::int64_t node_cap) {
    if (!(eps > 0.0))
        throw std::runtime_error("assemble_nonlocal: eps must be positive");

    NonlocalOperator op;
    op.g = &g;
    op.fam = fam;
    op.eps = eps;
    op.gamma = fam.quadrature_correction(g.h, eps);

    switch (storage) {
        case Storage::Dense: op.dense = true; break;
        case Storage::Sparse: op.dense = false; break;
        default: op.dense = g.nn < node_cap; break;
    }

    const double cut = eps * (1.0 + 1e-12);
    const double cut2 = cut * cut;
    const double scale = op.gamma * g.cellvol;
    const std::int64_t nn = g.nn;

    if (op.dense) {
        op.wd.assign(static_cast<size_t>(nn) * nn, 0.0);
        op.rowsum.assign(static_cast<size_t>(nn), 0.0);
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            double acc = 0.0;
            double* row = &op.wd[static_cast<size_t>(i) * nn];
            for (std::int64_t j = 0; j < nn; ++j) {
                if (j == i) continue;
                double r2 = dist2(g, i, j);
                if (r2 > cut2) continue;
                double w = scale * fam.k_eps(eps, std::sqrt(r2));
                row[j] = w;
                acc += w;
            }
            op.rowsum[static_cast<size_t>(i)] = acc;
        }
    } else {
        // offsets within the support box, fixed stencil reused per row
        const int mx = static_cast<int>(std::floor(cut / g.h[0]));
        const int my = static_cast<int>(std::floor(cut / g.h[1]));
        const int mz = g.dim == 3 ? static_cast<int>(std::floor(cut / g.h[2])) : 0;
        struct Off { int dx, dy, dz; double w; };
        std::vector<Off> offs;
        for (int dz = -mz; dz <= mz; ++dz)
            for (int dy = -my; dy <= my; ++dy)
                for (int dx = -mx; dx <= mx; ++dx) {
                    if (dx == 0 && dy == 0 && dz == 0) continue;
                    double zx = dx * g.h[0], zy = dy * g.h[1];
                    double r2 = zx * zx + zy * zy;
                    if (g.dim == 3) {
                        double zz = dz * g.h[2];
                        r2 += zz * zz;
                    }
                    if (r2 > cut2) continue;
                    offs.push_back({dx, dy, dz, scale * fam.k_eps(eps, std::sqrt(r2))});
                }

        op.rowptr.assign(static_cast<size_t>(nn) + 1, 0);
        std::vector<std::int64_t> counts(static_cast<size_t>(nn), 0);
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i) {
                    std::int64_t c = 0;
                    for (const auto& o : offs) {
                        int ii = i + o.dx, jj = j + o.dy, kk = k + o.dz;
                        if (ii < 0 || ii >= g.n[0] || jj < 0 || jj >= g.n[1]) continue;
                        if (g.dim == 3 && (kk < 0 || kk >= g.n[2])) continue;
                        ++c;
                    }
                    counts[static_cast<size_t>(g.index(i, j, k))] = c;
                }
        for (std::int64_t i = 0; i < nn; ++i)
            op.rowptr[static_cast<size_t>(i) + 1] = op.rowptr[static_cast<size_t>(i)] + counts[static_cast<size_t>(i)];
        op.colidx.assign(static_cast<size_t>(op.rowptr.back()), 0);
        op.ws.assign(static_cast<size_t>(op.rowptr.back()), 0.0);
        op.rowsum.assign(static_cast<size_t>(nn), 0.0);
#pragma omp parallel for collapse(2) schedule(static)
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i) {
                    std::int64_t row = g.index(i, j, k);
                    std::int64_t at = op.rowptr[static_cast<size_t>(row)];
                    double acc = 0.0;
                    for (const auto& o : offs) {
                        int ii = i + o.dx, jj = j + o.dy, kk = k + o.dz;
                        if (ii < 0 || ii >= g.n[0] || jj < 0 || jj >= g.n[1]) continue;
                        if (g.dim == 3 && (kk < 0 || kk >= g.n[2])) continue;
                        op.colidx[static_cast<size_t>(at)] = static_cast<std::int32_t>(g.index(ii, jj, kk));
                        op.ws[static_cast<size_t>(at)] = o.w;
                        acc += o.w;
                        ++at;
                    }
                    op.rowsum[static_cast<size_t>(row)] = acc;
                }
    }
    return op;
}

std::int64_t NonlocalOperator::neighbor_count(std::int64_t row) const {
    if (dense) {
        const double* r = &wd[static_cast<size_t>(row) * g->nn];
        std::int64_t c = 0;
        for (std::int64_t j = 0; j < g->nn; ++j)
            if (r[j] != 0.0) ++c;
        return c;
    }
    return rowptr[static_cast<size_t>(row) + 1] - rowptr[static_cast<size_t>(row)];
}

std::int64_t NonlocalOperator::stored_entries() const {
    return dense ? static_cast<std::int64_t>(wd.size()) : static_cast<std::int64_t>(ws.size());
}

// difference form w_ij (x_i - x_j): every term vanishes exactly on a
// constant field, which the conservation checks take at face value
void NonlocalOperator::apply(const double* x, double* y) const {
    const std::int64_t nn = g->nn;
    if (dense) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            const double xi = x[i];
            double acc = 0.0;
            for (std::int64_t j = 0; j < nn; ++j) acc += row[j] * (xi - x[j]);
            y[i] = acc;
        }
    } else {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < nn; ++i) {
            const double xi = x[i];
            double acc = 0.0;
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p)
                acc += ws[static_cast<size_t>(p)] * (xi - x[colidx[static_cast<size_t>(p)]]);
            y[i] = acc;
        }
    }
}

void NonlocalOperator::apply_serial(const double* x, double* y) const {
    const std::int64_t nn = g->nn;
    if (dense) {
        for (std::int64_t i = 0; i < nn; ++i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            const double xi = x[i];
            double acc = 0.0;
            for (std::int64_t j = 0; j < nn; ++j) acc += row[j] * (xi - x[j]);
            y[i] = acc;
        }
    } else {
        for (std::int64_t i = 0; i < nn; ++i) {
            const double xi = x[i];
            double acc = 0.0;
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p)
                acc += ws[static_cast<size_t>(p)] * (xi - x[colidx[static_cast<size_t>(p)]]);
            y[i] = acc;
        }
    }
}

std::vector<double> NonlocalOperator::apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    apply(x.data(), y.data());
    return y;
}

namespace {

// per-row partial sums in parallel, then one serial pass in index order,
// so the result is the same for any thread count
template <class RowFn>
double rows_then_reduce(std::int64_t nn, RowFn&& fn) {
    std::vector<double> part(static_cast<size_t>(nn));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i) part[static_cast<size_t>(i)] = fn(i);
    double s = 0.0;
    for (std::int64_t i = 0; i < nn; ++i) s += part[static_cast<size_t>(i)];
    return s;
}

} // namespace

double NonlocalOperator::energy(const std::vector<double>& phi) const {
    const std::int64_t nn = g->nn;
    const double* x = phi.data();
    double q;
    if (dense) {
        q = rows_then_reduce(nn, [&](std::int64_t i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            double acc = 0.0;
            for (std::int64_t j = 0; j < nn; ++j) {
                double d = x[i] - x[j];
                acc += row[j] * d * d;
            }
            return acc;
        });
    } else {
        q = rows_then_reduce(nn, [&](std::int64_t i) {
            double acc = 0.0;
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p) {
                double d = x[i] - x[colidx[static_cast<size_t>(p)]];
                acc += ws[static_cast<size_t>(p)] * d * d;
            }
            return acc;
        });
    }
    return 0.25 * g->cellvol * q;
}

double NonlocalOperator::energy_serial(const std::vector<double>& phi) const {
    const std::int64_t nn = g->nn;
    const double* x = phi.data();
    double q = 0.0;
    if (dense) {
        for (std::int64_t i = 0; i < nn; ++i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            double acc = 0.0;
            for (std::int64_t j = 0; j < nn; ++j) {
                double d = x[i] - x[j];
                acc += row[j] * d * d;
            }
            q += acc;
        }
    } else {
        for (std::int64_t i = 0; i < nn; ++i) {
            double acc = 0.0;
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p) {
                double d = x[i] - x[colidx[static_cast<size_t>(p)]];
                acc += ws[static_cast<size_t>(p)] * d * d;
            }
            q += acc;
        }
    }
    return 0.25 * g->cellvol * q;
}

double NonlocalOperator::bilinear(const std::vector<double>& a, const std::vector<double>& b) const {
    const std::int64_t nn = g->nn;
    const double* xa = a.data();
    const double* xb = b.data();
    double q;
    if (dense) {
        q = rows_then_reduce(nn, [&](std::int64_t i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            double acc = 0.0;
            for (std::int64_t j = 0; j < nn; ++j)
                acc += row[j] * (xa[i] - xa[j]) * (xb[i] - xb[j]);
            return acc;
        });
    } else {
        q = rows_then_reduce(nn, [&](std::int64_t i) {
            double acc = 0.0;
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p) {
                std::int64_t j = colidx[static_cast<size_t>(p)];
                acc += ws[static_cast<size_t>(p)] * (xa[i] - xa[j]) * (xb[i] - xb[j]);
            }
            return acc;
        });
    }
    return 0.5 * g->cellvol * q;
}

double NonlocalOperator::norm_veps(const std::vector<double>& phi) const {
    double h2 = dot_h(*g, phi, phi);
    return std::sqrt(h2 + 2.0 * energy(phi));
}

double NonlocalOperator::norm_weps(const std::vector<double>& phi) const {
    double h2 = dot_h(*g, phi, phi);
    auto b = apply(phi);
    return std::sqrt(h2 + dot_h(*g, b, b));
}

double NonlocalOperator::weight(std::int64_t i, std::int64_t j) const {
    if (i == j) return 0.0;
    if (dense) return wd[static_cast<size_t>(i) * g->nn + j];
    for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p)
        if (colidx[static_cast<size_t>(p)] == j) return ws[static_cast<size_t>(p)];
    return 0.0;
}

std::vector<double> NonlocalOperator::h_form_dense() const {
    const std::int64_t nn = g->nn;
    std::vector<double> m(static_cast<size_t>(nn) * nn, 0.0);
    for (std::int64_t i = 0; i < nn; ++i) {
        for (std::int64_t j = 0; j < nn; ++j) {
            double w = i == j ? 0.0 : weight(i, j);
            m[static_cast<size_t>(i) * nn + j] = -g->cellvol * w;
        }
        m[static_cast<size_t>(i) * nn + i] = g->cellvol * rowsum[static_cast<size_t>(i)];
    }
    return m;
}

std::vector<double> NonlocalOperator::row_sums_direct() const {
    const std::int64_t nn = g->nn;
    std::vector<double> s(static_cast<size_t>(nn), 0.0);
    for (std::int64_t i = 0; i < nn; ++i) {
        double acc = 0.0;
        if (dense) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            for (std::int64_t j = 0; j < nn; ++j) acc += row[j];
        } else {
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p)
                acc += ws[static_cast<size_t>(p)];
        }
        s[static_cast<size_t>(i)] = acc;
    }
    return s;
}

std::vector<double> NonlocalOperator::col_sums_direct() const {
    const std::int64_t nn = g->nn;
    std::vector<double> s(static_cast<size_t>(nn), 0.0);
    if (dense) {
        for (std::int64_t i = 0; i < nn; ++i) {
            const double* row = &wd[static_cast<size_t>(i) * nn];
            for (std::int64_t j = 0; j < nn; ++j) s[static_cast<size_t>(j)] += row[j];
        }
    } else {
        for (std::int64_t i = 0; i < nn; ++i)
            for (std::int64_t p = rowptr[static_cast<size_t>(i)]; p < rowptr[static_cast<size_t>(i) + 1]; ++p)
                s[static_cast<size_t>(colidx[static_cast<size_t>(p)])] += ws[static_cast<size_t>(p)];
    }
    return s;
}

} // namespace scpf
