#include "scpf/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scpf {

const char* graph_name(GraphId g) {
    switch (g) {
        case GraphId::Log: return "log";
        case GraphId::Indicator: return "indicator";
        case GraphId::Power: return "power";
        default: return "natural-log";
    }
}

GraphId graph_from_name(const std::string& s) {
    if (s == "log") return GraphId::Log;
    if (s == "indicator") return GraphId::Indicator;
    if (s == "power") return GraphId::Power;
    if (s == "natural-log") return GraphId::NaturalLog;
    throw std::runtime_error("unknown graph: " + s);
}

MonotoneGraph MonotoneGraph::make(GraphId id, int exponent) {
    MonotoneGraph g;
    g.id = id;
    g.exponent = exponent;
    if (id == GraphId::Power) {
        if (exponent <= 0 || exponent % 2 == 0)
            throw std::runtime_error("power graph exponent must be a positive odd integer");
    }
    return g;
}

double MonotoneGraph::dom_lo() const {
    switch (id) {
        case GraphId::Log:
        case GraphId::Indicator: return -1.0;
        case GraphId::Power: return -std::numeric_limits<double>::infinity();
        default: return 0.0;
    }
}

double MonotoneGraph::dom_hi() const {
    switch (id) {
        case GraphId::Log:
        case GraphId::Indicator: return 1.0;
        default: return std::numeric_limits<double>::infinity();
    }
}

bool MonotoneGraph::in_domain_closure(double r) const {
    switch (id) {
        case GraphId::Log:
        case GraphId::Indicator: return r >= -1.0 && r <= 1.0;
        case GraphId::Power: return true;
        default: return r >= 0.0;
    }
}

bool MonotoneGraph::in_domain_interior(double r) const {
    switch (id) {
        case GraphId::Log:
        case GraphId::Indicator: return r > -1.0 && r < 1.0;
        case GraphId::Power: return true;
        default: return r > 0.0;
    }
}

double MonotoneGraph::potential(double r) const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (id) {
        case GraphId::Log: {
            if (r < -1.0 || r > 1.0) return inf;
            // (1+r)ln(1+r) + (1-r)ln(1-r), endpoint limits are finite
            auto term = [](double a) { return a > 0.0 ? a * std::log(a) : 0.0; };
            return term(1.0 + r) + term(1.0 - r);
        }
        case GraphId::Indicator:
            return (r >= -1.0 && r <= 1.0) ? 0.0 : inf;
        case GraphId::Power:
            return std::pow(r, exponent + 1) / (exponent + 1);
        default: {
            if (r < 0.0) return inf;
            if (r == 0.0) return 1.0; // limit of r ln r - r + 1
            return r * std::log(r) - r + 1.0;
        }
    }
}

double MonotoneGraph::value(double s) const {
    switch (id) {
        case GraphId::Log: return std::log((1.0 + s) / (1.0 - s));
        case GraphId::Indicator: return 0.0; // interior branch
        case GraphId::Power: return std::pow(s, exponent);
        default: return std::log(s);
    }
}

double MonotoneGraph::value_prime(double s) const {
    switch (id) {
        case GraphId::Log: return 2.0 / (1.0 - s * s);
        case GraphId::Indicator: return 0.0;
        case GraphId::Power: return exponent * std::pow(s, exponent - 1);
        default: return 1.0 / s;
    }
}

double MonotoneGraph::minimal_section(double r) const {
    switch (id) {
        case GraphId::Indicator:
            if (r < -1.0 || r > 1.0)
                throw std::runtime_error("minimal section outside the domain");
            return 0.0; // also the tie-break at the endpoints
        default:
            if (!in_domain_interior(r))
                throw std::runtime_error("minimal section outside the domain interior");
            return value(r);
    }
}

double safeguarded_newton(const std::function<double(double)>& f,
                          const std::function<double(double)>& fprime,
                          double lo, double hi, double guess, double abs_tol) {
    // invariant: f(lo) <= 0 <= f(hi); newton step accepted only inside
    double a = lo, b = hi;
    double x = std::clamp(guess, a, b);
    double fx = f(x);
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fx) <= abs_tol) return x;
        if (fx > 0.0) b = x; else a = x;
        double dfx = fprime(x);
        double xn = dfx != 0.0 ? x - fx / dfx : 0.5 * (a + b);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        if (xn == a || xn == b) {
            // bracket narrowed to adjacent doubles; near a steep branch the
            // residual tolerance is unreachable and this is the best root
            return std::abs(f(a)) <= std::abs(f(b)) ? a : b;
        }
        x = xn;
        fx = f(x);
    }
    if (std::abs(fx) <= abs_tol) return x;
    throw std::runtime_error("scalar newton failed to reach tolerance");
}

double MonotoneGraph::resolvent(double lam, double r) const {
    if (!(lam > 0.0))
        throw std::runtime_error("resolvent needs lam > 0");
    const double tol = 1e-12;
    switch (id) {
        case GraphId::Indicator:
            return std::clamp(r, -1.0, 1.0);
        case GraphId::Log: {
            // solve s + lam ln((1+s)/(1-s)) = r on (-1,1)
            auto f = [&](double s) { return s + lam * value(s) - r; };
            auto fp = [&](double s) { return 1.0 + lam * value_prime(s); };
            // bracket strictly inside; push toward the walls until signs flip
            double d = 1e-3;
            while ((f(-1.0 + d) > 0.0 || f(1.0 - d) < 0.0) && d > 1e-250) d *= 1e-3;
            double a = -1.0 + d, b = 1.0 - d;
            // extreme inputs push the root below resolution of the wall gap;
            // the wall value is then exact to machine precision
            if (f(a) > 0.0) return a;
            if (f(b) < 0.0) return b;
            return safeguarded_newton(f, fp, a, b, std::clamp(r, a, b), tol);
        }
        case GraphId::Power: {
            auto f = [&](double s) { return s + lam * std::pow(s, exponent) - r; };
            auto fp = [&](double s) { return 1.0 + lam * exponent * std::pow(s, exponent - 1); };
            double m = std::max(1.0, std::abs(r));
            return safeguarded_newton(f, fp, -m, m, r / (1.0 + lam), tol);
        }
        default: {
            // solve s + lam ln s = r on (0,inf)
            auto f = [&](double s) { return s + lam * std::log(s) - r; };
            auto fp = [&](double s) { return 1.0 + lam / s; };
            double a = std::min(1.0, std::exp(std::min(0.0, r / lam)));
            while (f(a) > 0.0 && a > 1e-290) a *= 0.5;
            if (f(a) > 0.0) return a; // root below representable range
            double b = std::max(1.0, r) + lam;
            while (f(b) < 0.0) b *= 2.0;
            double guess = std::clamp(r > 1.0 ? r : 1.0, a, b);
            return safeguarded_newton(f, fp, a, b, guess, tol);
        }
    }
}

double MonotoneGraph::yosida(double lam, double r) const {
    return (r - resolvent(lam, r)) / lam;
}

double MonotoneGraph::yosida_prime(double lam, double r) const {
    double j = resolvent(lam, r);
    double jprime;
    switch (id) {
        case GraphId::Indicator:
            // tie-break: endpoints count as inactive, derivative from inside
            jprime = (r >= -1.0 && r <= 1.0) ? 1.0 : 0.0;
            break;
        default:
            jprime = 1.0 / (1.0 + lam * value_prime(j));
            break;
    }
    return (1.0 - jprime) / lam;
}

double MonotoneGraph::moreau(double lam, double r) const {
    auto envelope = [&](double x) {
        double j = resolvent(lam, x);
        double d = x - j;
        return d * d / (2.0 * lam) + potential(j);
    };
    // anchor at the potential's zero so the envelope stays nonnegative;
    // that point is 1 for the min-normalized natural log, 0 otherwise
    return envelope(r) - envelope(id == GraphId::NaturalLog ? 1.0 : 0.0);
}

double MonotoneGraph::graph_distance(double r, double xi) const {
    auto d2_to = [&](double px, double py) {
        double dx = r - px, dy = xi - py;
        return dx * dx + dy * dy;
    };
    if (id == GraphId::Indicator) {
        // flat segment plus two vertical rays
        double d2 = d2_to(std::clamp(r, -1.0, 1.0), 0.0);
        d2 = std::min(d2, d2_to(1.0, std::max(xi, 0.0)));
        d2 = std::min(d2, d2_to(-1.0, std::min(xi, 0.0)));
        return std::sqrt(d2);
    }
    // smooth curve: coarse scan then golden-section refinement of
    // s -> (r-s)^2 + (xi - value(s))^2
    double lo, hi;
    switch (id) {
        case GraphId::Log: lo = -1.0 + 1e-12; hi = 1.0 - 1e-12; break;
        case GraphId::Power: {
            double m = std::max({1.0, std::abs(r), std::pow(std::abs(xi), 1.0 / exponent)});
            lo = -2.0 * m; hi = 2.0 * m;
            break;
        }
        default: lo = 1e-12; hi = std::max({2.0, 2.0 * r, 2.0 * std::exp(std::min(xi, 300.0))}); break;
    }
    auto obj = [&](double s) { return d2_to(s, value(s)); };
    const int scan = 1024;
    double best = lo, bestv = obj(lo);
    for (int i = 1; i <= scan; ++i) {
        double s = lo + (hi - lo) * i / scan;
        double v = obj(s);
        if (v < bestv) { bestv = v; best = s; }
    }
    double a = std::max(lo, best - (hi - lo) / scan);
    double b = std::min(hi, best + (hi - lo) / scan);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = obj(c), fd = obj(d);
    for (int it = 0; it < 80; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a); fc = obj(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a); fd = obj(d);
        }
    }
    return std::sqrt(std::min(fc, fd));
}

double LogRegularization::resolvent(double r) const {
    // hot path of the temperature solve, so hand-rolled: solve
    // s + lam ln s = r with a bracketed newton, no allocations
    auto f = [&](double s) { return s + lam * std::log(s) - r; };
    double a = std::min(1.0, std::exp(std::min(0.0, r / lam)));
    while (f(a) > 0.0 && a > 1e-290) a *= 0.5;
    if (f(a) > 0.0) return a;
    double b = std::max(1.0, r) + lam;
    while (f(b) < 0.0) b *= 2.0;
    double x = std::clamp(r > 1.0 ? r : 1.0, a, b);
    double fx = f(x);
    for (int it = 0; it < 200; ++it) {
        if (std::abs(fx) <= 1e-12) return x;
        if (fx > 0.0) b = x; else a = x;
        double xn = x - fx / (1.0 + lam / x);
        if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
        x = xn;
        fx = f(x);
    }
    if (std::abs(fx) <= 1e-12) return x;
    throw std::runtime_error("log resolvent failed to converge");
}

double LogRegularization::reg_log(double r) const {
    return (r - resolvent(r)) / lam;
}

double LogRegularization::full_op(double r) const {
    return lam * r + reg_log(r);
}

double LogRegularization::full_op_prime(double r) const {
    double j = resolvent(r);
    return lam + 1.0 / (j + lam);
}

double LogRegularization::inverse_full_op(double u) const {
    // with s the resolvent of the preimage, lam*s + (1+lam^2) ln s = u
    const double c = 1.0 + lam * lam;
    auto f = [&](double s) { return lam * s + c * std::log(s) - u; };
    auto fp = [&](double s) { return lam + c / s; };
    double a = 1.0;
    while (f(a) > 0.0 && a > 1e-290) a *= 0.5;
    double b = 1.0;
    while (f(b) < 0.0 && b < 1e290) b *= 2.0;
    double s = safeguarded_newton(f, fp, a, b, std::clamp(std::exp(u / c), a, b), 1e-12);
    return s + lam * std::log(s);
}

} // namespace scpf
