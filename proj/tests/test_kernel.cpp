#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "scpf/grid.hpp"
#include "scpf/kernels.hpp"
#include "scpf/nonlocal.hpp"

using namespace scpf;

namespace {

std::vector<double> random_field(const Grid& g, std::uint64_t seed, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(static_cast<size_t>(g.nn));
    for (auto& x : v) x = amp * (2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0);
    return v;
}

std::vector<double> cos_x(const Grid& g) {
    std::vector<double> v(static_cast<size_t>(g.nn));
    for (std::int64_t id = 0; id < g.nn; ++id) {
        double x, y, z;
        g.coords(id, x, y, z);
        v[static_cast<size_t>(id)] = std::cos(M_PI * x / g.L[0]);
    }
    return v;
}

} // namespace

TEST_CASE("cd constant against quadrature of the sphere average") {
    CHECK(cd_constant(1) == 1.0);

    // d=2: integral of cos^2 over the circle is pi, so c_2 = 2/pi
    double s = 0.0;
    const int m = 400000;
    for (int i = 0; i < m; ++i) {
        double t = (i + 0.5) * 2.0 * M_PI / m;
        s += std::cos(t) * std::cos(t);
    }
    s *= 2.0 * M_PI / m;
    CHECK(cd_constant(2) == doctest::Approx(2.0 / s).epsilon(1e-10));
    CHECK(cd_constant(2) == doctest::Approx(0.63661977236758138).epsilon(1e-14));

    // d=3: spherical quadrature of sigma_1^2 gives 4pi/3, so c_3 = 3/(2pi)
    double s3 = 0.0;
    const int mt = 2000, mp = 2000;
    for (int i = 0; i < mt; ++i) {
        double th = (i + 0.5) * M_PI / mt;
        double band = 0.0;
        for (int j = 0; j < mp; ++j) {
            double ph = (j + 0.5) * 2.0 * M_PI / mp;
            double s1 = std::sin(th) * std::cos(ph);
            band += s1 * s1;
        }
        s3 += band * std::sin(th) * (M_PI / mt) * (2.0 * M_PI / mp);
    }
    CHECK(cd_constant(3) == doctest::Approx(2.0 / s3).epsilon(1e-6));
    CHECK(cd_constant(3) == doctest::Approx(3.0 / (2.0 * M_PI)).epsilon(1e-14));

    CHECK(sphere_measure(2) == doctest::Approx(2.0 * M_PI).epsilon(1e-14));
    CHECK(sphere_measure(3) == doctest::Approx(4.0 * M_PI).epsilon(1e-14));
    CHECK_THROWS(cd_constant(4));
}

TEST_CASE("profiles are calibrated to the radial moment") {
    for (int dim : {2, 3}) {
        for (KernelId id : {KernelId::Indicator, KernelId::Polynomial, KernelId::Gaussian}) {
            auto fam = KernelFamily::make(id, dim);
            CHECK(fam.radial_moment() == doctest::Approx(cd_constant(dim)).epsilon(1e-10));
            CHECK(fam.normalization_ok());
            // a scaled profile must fail the self test
            auto off = KernelFamily::make(id, dim, 1.2);
            CHECK_FALSE(off.normalization_ok());
        }
    }

    // indicator closed form in 2d: rho(s) = 2 c_2 on [0,1]
    auto ind = KernelFamily::make(KernelId::Indicator, 2);
    CHECK(ind.rho(0.5) == doctest::Approx(2.0 * cd_constant(2)).epsilon(1e-14));
    CHECK(ind.rho(1.5) == 0.0);
    CHECK(ind.rho(-0.1) == 0.0);

    // eps scaling: rho_eps(r) = eps^-d rho(r/eps), support [0, eps]
    CHECK(ind.rho_eps(0.25, 0.1) ==
          doctest::Approx(std::pow(0.25, -2) * ind.rho(0.4)).epsilon(1e-14));
    CHECK(ind.rho_eps(0.25, 0.3) == 0.0);
    CHECK(ind.k_eps(0.25, 0.1) == doctest::Approx(ind.rho_eps(0.25, 0.1) / 0.01).epsilon(1e-14));
}

TEST_CASE("tail mass vanishes along the ladder") {
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    const double delta = 0.1;
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.4, 0.2, 0.1, 0.05}) {
        double t = fam.tail_mass(eps, delta);
        CHECK(t >= 0.0);
        CHECK(t <= prev);
        prev = t;
    }
    // support below the cut: the tail is identically zero
    CHECK(fam.tail_mass(0.05, delta) == 0.0);
    CHECK(fam.tail_mass(0.4, delta) > 1e-3 * cd_constant(2));
    CHECK(prev < 1e-3 * cd_constant(2));
}

TEST_CASE("quadrature correction cancels against the lattice moment") {
    auto fam = KernelFamily::make(KernelId::Gaussian, 2);
    std::array<double, 3> h{1.0 / 16, 1.0 / 16, 0.0};
    double gamma = fam.quadrature_correction(h, 0.25);
    CHECK(gamma > 0.5);
    CHECK(gamma < 2.0);
    CHECK(gamma * fam.lattice_moment(h, 0.25) ==
          doctest::Approx(fam.moment_target()).epsilon(1e-14));
}

TEST_CASE("two node toy operator") {
    // two cells sharing a face, one interacting pair
    Grid g = make_grid(2, 2, 1, 1, 1.0, 0.5, 0.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    const double eps = 0.9;
    auto op = assemble_nonlocal(g, fam, eps, Storage::Dense);

    double w = op.weight(0, 1);
    CHECK(w == op.weight(1, 0));
    // hand summation: the single pair sits at distance h
    double expect = op.gamma * g.cellvol * fam.k_eps(eps, 0.5);
    CHECK(w == doctest::Approx(expect).epsilon(1e-13));

    std::vector<double> phi{0.0, 1.0};
    auto y = op.apply(phi);
    CHECK(y[0] == doctest::Approx(-w).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(+w).epsilon(1e-14));

    // energy of the pair: quarter double sum collapses to cellvol*w*diff^2/2
    CHECK(op.energy(phi) == doctest::Approx(0.5 * g.cellvol * w).epsilon(1e-13));
}

TEST_CASE("constants are annihilated exactly") {
    Grid g = make_grid(2, 8, 8, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Indicator, 2);
    for (Storage st : {Storage::Dense, Storage::Sparse}) {
        auto op = assemble_nonlocal(g, fam, 0.3, st);
        std::vector<double> c(static_cast<size_t>(g.nn), 7.5);
        auto y = op.apply(c);
        for (double v : y) CHECK(v == 0.0);
        CHECK(op.energy(c) == 0.0);
    }
}

TEST_CASE("apply is linear and storage independent") {
    Grid g = make_grid(2, 12, 12, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    auto dense = assemble_nonlocal(g, fam, 0.3, Storage::Dense);
    auto sparse = assemble_nonlocal(g, fam, 0.3, Storage::Sparse);

    auto a = random_field(g, 31);
    auto b = random_field(g, 32);
    auto ya = dense.apply(a);
    auto yb = dense.apply(b);
    std::vector<double> comb(a.size());
    for (size_t i = 0; i < a.size(); ++i) comb[i] = 2.0 * a[i] - 3.0 * b[i];
    auto yc = dense.apply(comb);
    double scale = norm_h(g, yc);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(yc[i] - (2.0 * ya[i] - 3.0 * yb[i])) < 1e-12 * scale);

    auto ys = sparse.apply(a);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(ys[i] - ya[i]) < 1e-13 * (1.0 + std::abs(ya[i])));
    CHECK(sparse.energy(a) == doctest::Approx(dense.energy(a)).epsilon(1e-12));
}

TEST_CASE("row sums equal column sums on an 8x8 grid") {
    Grid g = make_grid(2, 8, 8, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Gaussian, 2);
    auto op = assemble_nonlocal(g, fam, 0.35, Storage::Dense);
    auto rows = op.row_sums_direct();
    auto cols = op.col_sums_direct();
    for (std::int64_t i = 0; i < g.nn; ++i) {
        CHECK(rows[static_cast<size_t>(i)] ==
              doctest::Approx(cols[static_cast<size_t>(i)]).epsilon(1e-13));
        CHECK(rows[static_cast<size_t>(i)] ==
              doctest::Approx(op.rowsum[static_cast<size_t>(i)]).epsilon(1e-13));
    }
}

TEST_CASE("quadratic form identities") {
    Grid g = make_grid(2, 16, 16, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    auto op = assemble_nonlocal(g, fam, 0.25);

    auto phi = random_field(g, 41);
    auto psi = random_field(g, 42);

    double e = op.energy(phi);
    CHECK(e >= 0.0);
    CHECK(2.0 * e == doctest::Approx(dot_h(g, phi, op.apply(phi))).epsilon(1e-12));
    CHECK(op.bilinear(phi, phi) == doctest::Approx(2.0 * e).epsilon(1e-12));
    CHECK(op.bilinear(phi, psi) ==
          doctest::Approx(dot_h(g, op.apply(phi), psi)).epsilon(1e-12));
    CHECK(op.bilinear(psi, phi) == doctest::Approx(op.bilinear(phi, psi)).epsilon(1e-13));

    std::vector<double> one(phi.size(), 1.0);
    CHECK(std::abs(op.bilinear(phi, one)) < 1e-14 * (1.0 + std::abs(2.0 * e)));

    CHECK(op.norm_veps(std::vector<double>(phi.size(), 0.0)) == 0.0);
    CHECK(op.norm_weps(std::vector<double>(phi.size(), 0.0)) == 0.0);
    CHECK(op.norm_veps(phi) >= norm_h(g, phi));
    CHECK(op.norm_veps(phi) == doctest::Approx(std::sqrt(dot_h(g, phi, phi) + 2.0 * e)).epsilon(1e-13));
}

TEST_CASE("gateaux derivative of the quadratic energy") {
    Grid g = make_grid(2, 12, 12, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Indicator, 2);
    auto op = assemble_nonlocal(g, fam, 0.3);
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 10; ++trial) {
        auto phi = random_field(g, rng());
        auto psi = random_field(g, rng());
        // E is exactly quadratic, so the central difference is exact for any h
        const double h = 0.25;
        std::vector<double> p(phi.size()), m(phi.size());
        for (size_t i = 0; i < phi.size(); ++i) {
            p[i] = phi[i] + h * psi[i];
            m[i] = phi[i] - h * psi[i];
        }
        double cd = (op.energy(p) - op.energy(m)) / (2.0 * h);
        double pair = dot_h(g, op.apply(phi), psi);
        CHECK(cd == doctest::Approx(pair).epsilon(1e-11));
    }
}

TEST_CASE("spectrum is psd with a simple zero eigenvalue") {
    Grid g = make_grid(2, 8, 8, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    auto op = assemble_nonlocal(g, fam, 0.3, Storage::Dense);
    auto m = op.h_form_dense();
    const int n = static_cast<int>(g.nn);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            M(i, j) = m[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    REQUIRE(es.info() == Eigen::Success);
    double top = es.eigenvalues().maxCoeff();
    CHECK(es.eigenvalues()(0) >= -1e-10 * top);
    // the kernel is exactly the constants: second eigenvalue strictly positive
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-12 * top);
    CHECK(es.eigenvalues()(1) > 1e-8 * top);
}

TEST_CASE("cosine energy approaches the dirichlet integral") {
    Grid g = make_grid(2, 32, 32, 1, 1.0, 1.0, 0.0);
    auto psi = cos_x(g);
    const double target = M_PI * M_PI / 4.0; // = half the dirichlet integral of cos(pi x)
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.4, 0.2, 0.1}) {
        auto op = assemble_nonlocal(g, fam, eps);
        double gap = std::abs(op.energy(psi) - target);
        CHECK(gap < prev);
        prev = gap;
    }
    // the smallest rung should already sit well under a tenth of the target
    CHECK(prev < 0.1 * target);
}

TEST_CASE("serial and parallel paths agree bitwise") {
    Grid g = make_grid(2, 20, 20, 1, 1.0, 1.0, 0.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);
    auto op = assemble_nonlocal(g, fam, 0.2, Storage::Sparse);
    auto x = random_field(g, 99);
    std::vector<double> yp(x.size()), ys(x.size());
    op.apply(x.data(), yp.data());
    op.apply_serial(x.data(), ys.data());
    for (size_t i = 0; i < x.size(); ++i) CHECK(yp[i] == ys[i]);
    CHECK(op.energy(x) == op.energy_serial(x));
}
