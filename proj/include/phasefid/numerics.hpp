#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Adaptive quadrature for the self-consistent integrals and a damped-Newton
// nonlinear solver with finite-difference Jacobian (hybrd-equivalent
// contract). All routines are deterministic: identical inputs give
// bitwise-identical outputs on one platform.

namespace phasefid {

struct Quadrature {
    int max_panels = 4000;      // subdivision budget
    double rel_tol = 1e-12;     // in (1e-14, 1e-2)
    double abs_floor = 1e-300;  // integrals smaller than this count as zero
    double tail_mult = 40.0;    // semi-infinite truncation, >= 10
};

struct QuadratureError : std::runtime_error {
    double best_estimate;
    double error_bound;
    QuadratureError(const std::string& what, double best, double err)
        : std::runtime_error(what), best_estimate(best), error_bound(err) {}
};

struct SolverConfig {
    int max_iter = 200;
    double step_tol = 1e-13;
    double residual_tol = 1e-10;
    double damping_min = 1.0 / 1024.0;  // smallest Newton damping factor
    double fd_step = 1.4901161193847656e-08;  // sqrt(machine epsilon)
};

struct SolveError : std::runtime_error {
    std::vector<double> last_iterate;
    double residual_norm;
    SolveError(const std::string& what, std::vector<double> x, double rn)
        : std::runtime_error(what), last_iterate(std::move(x)), residual_norm(rn) {}
};

namespace detail {

// Gauss 7 / Kronrod 15 pair on [-1, 1] (QUADPACK abscissae).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double kGk15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kG7Weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelEstimate {
    double value;
    double error;
};

template <class F>
PanelEstimate gk15(F& f, double a, double b) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    const double fc = f(c);
    double kron = kGk15Weights[7] * fc;
    double gauss = kG7Weights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kGk15Nodes[i];
        const double fs = f(c - dx) + f(c + dx);
        kron += kGk15Weights[i] * fs;
        if (i % 2 == 1) gauss += kG7Weights[i / 2] * fs;
    }
    return {kron * h, std::abs(kron - gauss) * std::abs(h)};
}

}  // namespace detail

// Adaptive panel-subdivision integral of f over [a, b]. Optional breakpoints
// seed the initial panel edges (known Fermi edges, gap scales).
template <class F>
double integrate_finite(F&& f, double a, double b, const Quadrature& q,
                        std::span<const double> breakpoints = {}) {
    if (!(a < b)) throw QuadratureError("integrate_finite: requires a < b", 0.0, 0.0);
    if (q.rel_tol <= 1e-14 || q.rel_tol >= 1e-2 || q.tail_mult < 10.0 || q.max_panels < 1)
        throw QuadratureError("integrate_finite: config out of range", 0.0, 0.0);
    struct Panel {
        double a, b, value, error;
    };
    std::vector<double> edges{a, b};
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    std::sort(edges.begin(), edges.end());
    std::vector<Panel> panels;
    panels.reserve(64);
    double total = 0.0, err = 0.0;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        if (edges[i + 1] <= edges[i]) continue;
        const auto e = detail::gk15(f, edges[i], edges[i + 1]);
        panels.push_back({edges[i], edges[i + 1], e.value, e.error});
        total += e.value;
        err += e.error;
    }
    while (true) {
        const double target = std::max(q.rel_tol * std::abs(total), q.abs_floor);
        if (err <= target) return total;
        if (static_cast<int>(panels.size()) >= q.max_panels)
            throw QuadratureError("integrate_finite: panel budget exhausted", total, err);
        size_t worst = 0;
        for (size_t i = 1; i < panels.size(); ++i)
            if (panels[i].error > panels[worst].error) worst = i;
        const Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (mid <= p.a || mid >= p.b)
            throw QuadratureError("integrate_finite: panel underflow", total, err);
        const auto left = detail::gk15(f, p.a, mid);
        const auto right = detail::gk15(f, mid, p.b);
        total += left.value + right.value - p.value;
        err += left.error + right.error - p.error;
        panels[worst] = {p.a, mid, left.value, left.error};
        panels.push_back({mid, p.b, right.value, right.error});
    }
}

// Integral of sqrt(e) f(e) over [0, inf). The integrand must decay at least
// exponentially beyond mu_scale on the thermal scale; truncation happens at
// e_max = max(mu_scale, 0) + tail_mult * thermal_scale and the substitution
// e = s^2 removes the root singularity at the origin.
template <class F>
double integrate_semi_infinite(F&& f, double mu_scale, double thermal_scale, const Quadrature& q,
                               std::span<const double> breakpoints = {}) {
    const double thermal = std::max(thermal_scale, 1e-12);
    const double emax = std::max(mu_scale, 0.0) + q.tail_mult * thermal;
    // Guard edges on the thermal scale around every breakpoint: a Fermi layer
    // much thinner than a panel can otherwise hide between Kronrod nodes and
    // defeat the error estimate.
    std::vector<double> sbp;
    sbp.reserve(5 * breakpoints.size());
    for (double e : breakpoints)
        for (double shift : {-8.0, -2.0, 0.0, 2.0, 8.0}) {
            const double x = e + shift * thermal;
            if (x > 0.0 && x < emax) sbp.push_back(std::sqrt(x));
        }
    auto g = [&f](double s) { return 2.0 * s * s * f(s * s); };
    return integrate_finite(g, 0.0, std::sqrt(emax), q, sbp);
}

using SystemFn = std::function<std::vector<double>(std::span<const double>)>;

// Damped Newton with finite-difference Jacobian and backtracking, falling
// back to coordinate bisection when the Newton step fails to reduce the
// residual norm. Returns only iterates meeting the residual tolerance.
std::vector<double> solve_system(const SystemFn& residual, std::span<const double> initial,
                                 const SolverConfig& cfg);

// Bracketed scalar root: bisection tightened by secant steps. Requires
// f(lo) f(hi) <= 0; converges to |hi - lo| <= step_tol or |f| <= residual_tol.
double solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                       const SolverConfig& cfg);

// Gauss-Legendre nodes/weights on [-1, 1], deterministic Newton construction.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

}  // namespace phasefid
