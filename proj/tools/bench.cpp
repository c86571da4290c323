#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "scpf/kernels.hpp"
#include "scpf/nonlocal.hpp"
#include "scpf/stencil.hpp"

using namespace scpf;

namespace {

using clk = std::chrono::steady_clock;

double median_ms(const std::vector<double>& v) {
    std::vector<double> s(v);
    std::sort(s.begin(), s.end());
    return s[s.size() / 2];
}

template <class F> double time_ms(F&& f, int reps) {
    std::vector<double> t;
    for (int r = 0; r < reps; ++r) {
        auto a = clk::now();
        f();
        auto b = clk::now();
        t.push_back(std::chrono::duration<double, std::milli>(b - a).count());
    }
    return median_ms(t);
}

double urand(std::uint64_t& s) {
    // splitmix-style scramble, good enough for benchmark fields
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace

int main(int argc, char** argv) {
    bool smoke = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--smoke") == 0) smoke = true;

    const int n = smoke ? 32 : 96;
    const double eps = smoke ? 0.25 : 0.15;
    const int reps = smoke ? 3 : 7;

    Grid g = make_grid(2, n, n, 1, 1.0, 1.0, 1.0);
    auto fam = KernelFamily::make(KernelId::Polynomial, 2);

    std::printf("grid %dx%d (%lld nodes), eps %.3g, %d omp threads, median of %d\n", n, n,
                static_cast<long long>(g.nn), eps, omp_get_max_threads(), reps);

    NonlocalOperator op;
    double t_asm = time_ms([&] { op = assemble_nonlocal(g, fam, eps, Storage::Sparse); }, reps);
    std::printf("%-28s %10.3f ms   (%lld stored weights)\n", "assemble (parallel)", t_asm,
                static_cast<long long>(op.stored_entries()));

    std::uint64_t seed = 42;
    std::vector<double> x(static_cast<size_t>(g.nn)), y1(x.size()), y2(x.size());
    for (auto& v : x) v = 2.0 * urand(seed) - 1.0;

    double t_par = time_ms([&] { op.apply(x.data(), y1.data()); }, reps);
    double t_ser = time_ms([&] { op.apply_serial(x.data(), y2.data()); }, reps);
    double dmax = 0.0;
    for (size_t i = 0; i < x.size(); ++i) dmax = std::max(dmax, std::abs(y1[i] - y2[i]));
    std::printf("%-28s %10.3f ms vs %10.3f ms serial  speedup %5.2f  max|diff| %s\n",
                "interaction apply", t_par, t_ser, t_ser / t_par,
                dmax == 0.0 ? "bitwise 0" : "NONZERO");

    double e1 = 0.0, e2 = 0.0;
    double te_par = time_ms([&] { e1 = op.energy(x); }, reps);
    double te_ser = time_ms([&] { e2 = op.energy_serial(x); }, reps);
    std::printf("%-28s %10.3f ms vs %10.3f ms serial  speedup %5.2f  max|diff| %s\n",
                "interaction energy", te_par, te_ser, te_ser / te_par,
                e1 == e2 ? "bitwise 0" : "NONZERO");

    std::vector<double> l1(x.size());
    double tl = time_ms([&] { laplacian_neumann(g, x.data(), l1.data()); }, reps);
    std::printf("%-28s %10.3f ms\n", "five-point laplacian", tl);

    bool ok = dmax == 0.0 && e1 == e2;
    if (!ok) std::fprintf(stderr, "serial and parallel paths disagree\n");
    return ok ? 0 : 1;
}
