#pragma once

#include <functional>
#include <string>

namespace scpf {

enum class GraphId { Log, Indicator, Power, NaturalLog };

const char* graph_name(GraphId g);
GraphId graph_from_name(const std::string& s);

// Maximal monotone graph on the real line given through its convex
// potential. Four concrete graphs:
//   log:        r -> ln((1+r)/(1-r)) on (-1,1)
//   indicator:  subdifferential of the indicator of [-1,1]
//   power:      r -> r^p, p a positive odd integer (default 3)
//   natural-log r -> ln r on (0,inf)
// The first three carry the normalization potential(0) = 0. The natural
// log cannot have both a nonnegative potential and potential(0) = 0, so
// it uses the min-normalized primitive r ln r - r + 1 instead.
struct MonotoneGraph {
    GraphId id = GraphId::Power;
    int exponent = 3;

    static MonotoneGraph make(GraphId id, int exponent = 3);

    double dom_lo() const; // interior of the domain
    double dom_hi() const;
    bool in_domain_closure(double r) const;
    bool in_domain_interior(double r) const;

    double potential(double r) const;       // +inf outside the domain closure
    double value(double s) const;           // single-valued branch on the interior
    double value_prime(double s) const;     // derivative of the branch
    double minimal_section(double r) const; // least-norm element at r

    // resolvent of (id + lam * graph); safeguarded Newton, absolute
    // residual below 1e-12
    double resolvent(double lam, double r) const;
    double yosida(double lam, double r) const;        // (r - resolvent)/lam, exact identity
    double yosida_prime(double lam, double r) const;
    // Value of the regularized potential at r, anchored at the zero of
    // the primitive (the origin, or 1 for the natural log) so it stays
    // nonnegative; quadratic envelope otherwise.
    double moreau(double lam, double r) const;

    // Euclidean distance from the point (r, xi) to the graph.
    double graph_distance(double r, double xi) const;
};

// Regularized logarithm pieces used by the temperature equation.
// reg_log is the Yosida approximation of ln; full_op adds the linear term.
struct LogRegularization {
    double lam = 0.1;
    explicit LogRegularization(double lambda) : lam(lambda) {}

    double resolvent(double r) const;   // resolvent of (id + lam ln), positive root
    double reg_log(double r) const;     // Yosida of ln
    double full_op(double r) const;     // lam*r + reg_log(r)
    double full_op_prime(double r) const;
    // Inverse of full_op. Solved through the substitution s = resolvent
    // value, which turns the inversion into a single scalar root find.
    double inverse_full_op(double u) const;
};

// Scalar root helpers shared by the graph code; exposed for tests.
double safeguarded_newton(const std::function<double(double)>& f,
                          const std::function<double(double)>& fprime,
                          double lo, double hi, double guess, double abs_tol);

} // namespace scpf
