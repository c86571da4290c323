#pragma once

#include <cstdint>
#include <vector>

#include "scpf/grid.hpp"
#include "scpf/kernels.hpp"

namespace scpf {

enum class Storage { Auto, Dense, Sparse };

// Discrete interaction operator. Off-diagonal weights are
//   w_ij = gamma * cellvol * K_eps(|x_i - x_j|)
// with the self pair excluded and pairs beyond the support dropped.
// gamma is the moment calibration from KernelFamily; it keeps the
// operator asymptotically compatible with -lap when eps rides a few
// cells above h. Symmetry is exact because weights depend on the
// squared coordinate differences only.
struct NonlocalOperator {
    const Grid* g = nullptr;
    KernelFamily fam;
    double eps = 0.0;
    double gamma = 1.0;
    bool dense = false;

    // dense storage: row-major nn x nn off-diagonal weights (diag zero)
    std::vector<double> wd;
    // sparse storage: CSR over in-support neighbors
    std::vector<std::int64_t> rowptr;
    std::vector<std::int32_t> colidx;
    std::vector<double> ws;

    std::vector<double> rowsum; // D_i = sum_j w_ij, cached at assembly

    std::int64_t neighbor_count(std::int64_t row) const;
    std::int64_t stored_entries() const;

    void apply(const double* x, double* y) const;        // (B x)_i = sum_j w_ij (x_i - x_j)
    void apply_serial(const double* x, double* y) const; // reference loop, no omp
    std::vector<double> apply(const std::vector<double>& x) const;

    double energy(const std::vector<double>& phi) const;     // quarter double sum
    double energy_serial(const std::vector<double>& phi) const;
    double bilinear(const std::vector<double>& a, const std::vector<double>& b) const;

    double norm_veps(const std::vector<double>& phi) const;  // sqrt(||.||_H^2 + 2 E)
    double norm_weps(const std::vector<double>& phi) const;  // sqrt(||.||_H^2 + ||B.||_H^2)

    double weight(std::int64_t i, std::int64_t j) const;     // w_ij regardless of storage

    // H-weighted symmetric matrix cellvol*(D - W), for small dense checks.
    std::vector<double> h_form_dense() const;

    std::vector<double> row_sums_direct() const;  // recomputed by direct summation
    std::vector<double> col_sums_direct() const;
};

NonlocalOperator assemble_nonlocal(const Grid& g, const KernelFamily& fam, double eps,
                                   Storage storage = Storage::Auto,
                                   std::int64_t node_cap = 4096);

} // namespace scpf
