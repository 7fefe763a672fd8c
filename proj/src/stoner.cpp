#include "phasefid/stoner.hpp"

#include <array>
#include <cmath>

#include "phasefid/stablemath.hpp"

namespace phasefid::stoner {

namespace {

const Quadrature& equilibrium_quadrature() {
    static const Quadrature q{4000, 1e-12, 1e-300, 40.0};
    return q;
}

// Band-integral tolerances for the per-mode log factors; the absolute floor
// sits just above the rounding-noise plateau of the large-offset integrand.
const Quadrature& fidelity_quadrature() {
    static const Quadrature q{4000, 1e-11, 3e-14, 40.0};
    return q;
}

struct BandEdges {
    double up;
    double dn;
};

// f(E_sigma) band edges: E_sigma = e - a_sigma with
// a_up = mu + h/2 - (4/3) u (1/2 - m), a_dn = mu - h/2 - (4/3) u (1/2 + m).
BandEdges band_edges(const Point& q, double m, double mu) {
    const double up = mu + 0.5 * q.h_ext - (4.0 / 3.0) * q.u * (0.5 - m);
    const double dn = mu - 0.5 * q.h_ext - (4.0 / 3.0) * q.u * (0.5 + m);
    return {up, dn};
}

double fermi_factor(double e, double a, double t) {
    const double x = (e - a) / t;
    if (x > 500.0) return 0.0;
    if (x < -500.0) return 1.0;
    return 1.0 / (std::exp(x) + 1.0);
}

std::array<double, 2> residual_pair(const Point& q, double m, double mu) {
    const BandEdges a = band_edges(q, m, mu);
    const double iu = fermi_integral(a.up, q.t);
    const double id = fermi_integral(a.dn, q.t);
    return {0.75 * (iu + id) - 1.0, 0.375 * (iu - id) - m};
}

// Chemical potential from the density equation at fixed m; the residual is
// strictly increasing in mu. A hint narrows the bracket on warm paths.
double solve_mu(const Point& q, double m, std::optional<double> hint = {}) {
    SolverConfig cfg;
    cfg.step_tol = 1e-14;
    cfg.residual_tol = 1e-13;
    auto f = [&](double mu) { return residual_pair(q, m, mu)[0]; };
    if (hint) {
        double lo = *hint - 0.2, hi = *hint + 0.2;
        for (int grow = 0; grow < 4; ++grow) {
            if (f(lo) <= 0.0 && f(hi) >= 0.0) return solve_bracketed(f, lo, hi, cfg);
            lo -= 0.4;
            hi += 0.4;
        }
    }
    return solve_bracketed(f, -12.0, 8.0, cfg);
}

double solve_paramagnetic_mu(const Point& q) { return solve_mu(q, 0.0); }

// Magnetization residual with mu eliminated through the density equation;
// roots of g are the self-consistent magnetizations.
struct NestedResidual {
    const Point& q;
    mutable std::optional<double> mu_hint;

    double operator()(double m) const {
        const double mu_m = solve_mu(q, m, mu_hint);
        mu_hint = mu_m;
        const BandEdges a = band_edges(q, m, mu_m);
        return 0.375 * (fermi_integral(a.up, q.t) - fermi_integral(a.dn, q.t)) - m;
    }
};

// Coarse bracket of the largest positive root of the nested residual, or 0
// when the paramagnetic root is the only one; a joint Newton polish follows.
// g(m) > 0 below the magnetic root and < 0 above it.
double nested_magnetic_root(const Point& q) {
    NestedResidual g{q, {}};
    SolverConfig cfg;
    cfg.step_tol = 2e-4;
    cfg.residual_tol = 1e-300;  // flat residuals near the bifurcation: stop on width only
    static constexpr double scan[] = {0.01, 0.03, 0.07, 0.12, 0.18, 0.25, 0.33, 0.42, 0.5};
    double prev_m = -1.0, prev_g = 0.0;
    for (double m : scan) {
        const double gm = g(m);
        if (prev_m > 0.0 && prev_g > 0.0 && gm <= 0.0) return solve_bracketed(g, prev_m, m, cfg);
        prev_m = m;
        prev_g = gm;
    }
    if (prev_g > 0.0) return 0.5;  // fully polarized limit
    // root may still hide below the first scan point, just past the onset
    if (g(1e-6) > 0.0) return solve_bracketed(g, 1e-6, scan[0], cfg);
    return 0.0;
}

// Field-polarized root: unique on the paramagnetic side, sign follows h_ext.
double nested_field_root(const Point& q) {
    NestedResidual g{q, {}};
    SolverConfig cfg;
    cfg.step_tol = 1e-14;
    cfg.residual_tol = 1e-300;  // stop on width only
    const double sgn = q.h_ext > 0.0 ? 1.0 : -1.0;
    double hi = sgn * 0.5;
    if (sgn * g(0.0) < 0.0 || sgn * g(hi) > 0.0)
        throw SolveError("nested_field_root: no bracketed field response", {0.0}, 1.0);
    return sgn > 0 ? solve_bracketed(g, 0.0, hi, cfg) : solve_bracketed(g, hi, 0.0, cfg);
}

State make_state(const Point& q, double m, double mu) {
    State s;
    s.q = q;
    s.m = m;
    s.mu = mu;
    s.converged = true;
    s.branch = std::abs(m) > 1e-7 ? Branch::magnetic : Branch::paramagnetic;
    if (s.branch == Branch::paramagnetic && q.h_ext == 0.0) s.m = 0.0;
    return s;
}

// Per-mode exponent coefficients: alpha(e) = -(e + (2/3) u - mu)/t for the
// number operator and w = (8/3) u m / t + h_ext / t for S^z.
struct ModeCoeffs {
    double shift;  // (2/3) u - mu
    double w;
    double t;
};

ModeCoeffs mode_coeffs(const State& s) {
    return {(2.0 / 3.0) * s.q.u - s.mu,
            ((8.0 / 3.0) * s.q.u * s.m + s.q.h_ext) / s.q.t, s.q.t};
}

}  // namespace

FermiMomenta zero_t_solve(double u) {
    if (u < 0.0) throw DomainError("zero_t_solve: u must be >= 0");
    if (u <= 1.0) return {1.0, 1.0};
    if (u >= full_polarization_u) return {std::cbrt(2.0), 0.0};
    // s = x + y solves s^3 - (9/(4u)) s^2 + 1 = 0 on [2^(1/3), 2].
    SolverConfig cfg;
    cfg.step_tol = 1e-15;
    cfg.residual_tol = 1e-15;
    const double coeff = 9.0 / (4.0 * u);
    auto cubic = [&](double s) { return s * s * s - coeff * s * s + 1.0; };
    const double s = solve_bracketed(cubic, std::cbrt(2.0), 2.0, cfg);
    const double p = s * s - 1.5 * s / u;
    const double disc = std::max(s * s - 4.0 * p, 0.0);
    const double d = std::sqrt(disc);
    return {0.5 * (s + d), 0.5 * (s - d)};
}

std::pair<double, double> zero_t_derivatives(double u) {
    if (u <= 1.0) throw DomainError("zero_t_derivatives: magnetic branch requires u > 1");
    if (u >= full_polarization_u) return {0.0, 0.0};  // saturated branch, (x, y) constant
    const FermiMomenta k = zero_t_solve(u);
    const double pref = 3.0 / (4.0 * u * u) * (k.x + k.y) / (k.x - k.y);
    return {pref * k.y / k.x, -pref * k.x / k.y};
}

double ground_energy(double u, double m) {
    const double p = 1.0 + 2.0 * m, q = 1.0 - 2.0 * m;
    return 0.3 * (std::pow(p, 5.0 / 3.0) + std::pow(q, 5.0 / 3.0)) + (u / 3.0) * (1.0 - 4.0 * m * m);
}

double ground_state_overlap(const FermiMomenta& a, const FermiMomenta& b, double size) {
    // N_sigma = (2/3) n x^3; states coincide iff the occupation counts do.
    const auto count = [size](double k) { return std::llround((2.0 / 3.0) * size * k * k * k); };
    return (count(a.x) == count(b.x) && count(a.y) == count(b.y)) ? 1.0 : 0.0;
}

double fermi_integral(double a, double t) {
    if (t <= 0.0) throw DomainError("fermi_integral: t must be > 0");
    const std::array<double, 1> bp{a};
    return integrate_semi_infinite([a, t](double e) { return fermi_factor(e, a, t); },
                                   a, t, equilibrium_quadrature(), bp);
}

namespace {

// Joint Newton polish; ties the equilibrium solve to the solve_system
// contract (both residuals <= 1e-10). Throws when Newton cannot hold the
// contract from the given start.
State polished_state(const Point& q, double m0, double mu0) {
    SolverConfig cfg;
    cfg.residual_tol = 1e-11;
    cfg.max_iter = 60;
    auto residual = [&](std::span<const double> x) {
        const auto r = residual_pair(q, x[0], x[1]);
        return std::vector<double>{r[0], r[1]};
    };
    const std::vector<double> x = solve_system(residual, std::array{m0, mu0}, cfg);
    return make_state(q, x[0], x[1]);
}

// Tight nested solve around a coarse magnetic root; covers the nearly
// singular Jacobian at the bifurcation where the joint Newton stalls.
State nested_refined_state(const Point& q, double m_coarse) {
    NestedResidual g{q, {}};
    SolverConfig cfg;
    cfg.step_tol = 1e-14;
    cfg.residual_tol = 1e-300;  // stop on width only
    double m = m_coarse;
    double half = 2e-3;
    for (int grow = 0; grow < 6; ++grow) {
        const double lo = std::max(1e-8, m_coarse - half);
        const double hi = std::min(0.5, m_coarse + half);
        if (g(lo) > 0.0 && g(hi) <= 0.0) {
            m = solve_bracketed(g, lo, hi, cfg);
            break;
        }
        half *= 4.0;
    }
    const double mu = solve_mu(q, m);
    const auto r = residual_pair(q, m, mu);
    if (std::abs(r[0]) > 1e-10 || std::abs(r[1]) > 1e-10)
        throw SolveError("solve_equilibrium: nested refinement missed the tolerance", {m, mu},
                         std::max(std::abs(r[0]), std::abs(r[1])));
    return make_state(q, m, mu);
}

State magnetic_state(const Point& q, double m_coarse, double mu_hint) {
    try {
        return polished_state(q, m_coarse, mu_hint);
    } catch (const SolveError&) {
        return nested_refined_state(q, m_coarse);
    }
}

}  // namespace

State solve_equilibrium(const Point& q, std::optional<State> seed) {
    if (q.t <= 0.0) throw DomainError("solve_equilibrium: requires t > 0 (use zero_t_solve at T=0)");
    if (q.u < 0.0) throw DomainError("solve_equilibrium: u must be >= 0");
    if (q.h_ext != 0.0) {
        const double m = nested_field_root(q);
        return polished_state(q, m, solve_mu(q, m));
    }
    const double mu_para = solve_paramagnetic_mu(q);
    const State para = make_state(q, 0.0, mu_para);
    if (q.u < 0.98) return para;  // u_c(t) >= 1, no magnetic root below
    // Warm path: Newton straight from the continuation seed.
    std::optional<State> magnetic;
    if (seed && seed->converged && std::abs(seed->m) > 1e-4) {
        try {
            const State s = polished_state(q, std::abs(seed->m), seed->mu);
            if (std::abs(s.m) > 1e-4) magnetic = s;
        } catch (const SolveError&) {
        }
    }
    if (!magnetic) {
        const double m_mag = nested_magnetic_root(q);
        if (m_mag > 1e-7) {
            const State s = magnetic_state(q, m_mag, solve_mu(q, m_mag, mu_para));
            if (std::abs(s.m) > 1e-7) magnetic = s;
        }
    }
    if (!magnetic) return para;
    State mag = *magnetic;
    if (mag.m < 0.0) mag = make_state(q, -mag.m, mag.mu);  // m -> -m symmetry
    return free_energy(mag) < free_energy(para) - 1e-14 ? mag : para;
}

double free_energy(const State& s) {
    const BandEdges a = band_edges(s.q, s.m, s.mu);
    const double t = s.q.t;
    const std::array<double, 2> bp{a.up, a.dn};
    const double band = integrate_semi_infinite(
        [&](double e) {
            return softplus(-(e - a.up) / t) + softplus(-(e - a.dn) / t);
        },
        std::max(a.up, a.dn), t, equilibrium_quadrature(), bp);
    return -t * band - (16.0 / 9.0) * s.q.u * (0.25 - s.m * s.m) + (4.0 / 3.0) * s.mu;
}

namespace {

double cosh_scaled(double x, double scale) {
    return 0.5 * (std::exp(x - scale) + std::exp(-x - scale));
}
double sinh_scaled(double x, double scale) {
    return 0.5 * (std::exp(x - scale) - std::exp(-x - scale));
}

}  // namespace

double mode_log_fidelity(const State& a, const State& b, double eps) {
    const ModeCoeffs ca = mode_coeffs(a), cb = mode_coeffs(b);
    const double alpha_a = -(eps + ca.shift) / ca.t;
    const double alpha_b = -(eps + cb.shift) / cb.t;
    const double abar = 0.5 * (alpha_a + alpha_b);
    const double hbar = 0.5 * (ca.w + cb.w);
    const double d_alpha = alpha_a - alpha_b;
    const double d_w = ca.w - cb.w;
    if (std::abs(d_alpha) > 2.0 || std::abs(d_w) > 8.0)
        return log_cosh_sum(abar, 0.5 * hbar) -
               0.5 * (log_cosh_sum(alpha_a, 0.5 * ca.w) + log_cosh_sum(alpha_b, 0.5 * cb.w));
    // Moderate-offset route: ln F_k = -(1/2)[log1p(r_a) + log1p(r_b)] with
    // r = (P - Pbar)/Pbar built from cosh(x + d) - cosh(x) =
    // 2 sinh(d/2) sinh(x + d/2); the direct log difference would leave a
    // 1e-15 noise floor that the size factor amplifies across the grid.
    const double scale =
        std::max(std::abs(abar) + 0.25 * std::abs(d_alpha),
                 0.5 * std::abs(hbar) + 0.125 * std::abs(d_w)) +
        0.1;
    const double pbar = cosh_scaled(abar, scale) + cosh_scaled(0.5 * hbar, scale);
    const auto rel = [&](double sgn) {
        const double da = 2.0 * std::sinh(sgn * 0.25 * d_alpha) *
                          sinh_scaled(abar + sgn * 0.25 * d_alpha, scale);
        const double dw = 2.0 * std::sinh(sgn * 0.125 * d_w) *
                          sinh_scaled(0.5 * hbar + sgn * 0.125 * d_w, scale);
        return (da + dw) / pbar;
    };
    return -0.5 * (std::log1p(rel(1.0)) + std::log1p(rel(-1.0)));
}

double mode_log_partition_ratio(const State& a, const State& b, double eps) {
    const ModeCoeffs ca = mode_coeffs(a), cb = mode_coeffs(b);
    const double alpha_a = -(eps + ca.shift) / ca.t;
    const double alpha_b = -(eps + cb.shift) / cb.t;
    const double abar = 0.5 * (alpha_a + alpha_b);
    const double hbar = 0.5 * (ca.w + cb.w);
    const double d_alpha = alpha_a - alpha_b;
    const double d_w = ca.w - cb.w;
    // ln C_k = -(1/2) sum_s ln(Z_s / Zbar) over the two states, with
    // ln((1 + e^{x + d})/(1 + e^{x})) = log1p(sigmoid(x) expm1(d)): exact for
    // small offsets where direct softplus differences would leave noise.
    const auto sigmoid = [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    };
    const auto shifted = [&](double x, double d) {
        if (std::abs(d) > 30.0) return softplus(x + d) - softplus(x);
        return std::log1p(sigmoid(x) * std::expm1(d));
    };
    const double dx = 0.5 * d_alpha + 0.25 * d_w;  // offset of alpha + w/2
    const double dy = 0.5 * d_alpha - 0.25 * d_w;  // offset of alpha - w/2
    const double xbar = abar + 0.5 * hbar, ybar = abar - 0.5 * hbar;
    return -0.5 * (shifted(xbar, dx) + shifted(ybar, dy) + shifted(xbar, -dx) + shifted(ybar, -dy));
}

namespace {

template <class ModeFn>
double integrate_band(const State& a, const State& b, double size, ModeFn&& mode) {
    const BandEdges ea = band_edges(a.q, a.m, a.mu);
    const BandEdges eb = band_edges(b.q, b.m, b.mu);
    const std::array<double, 4> bp{ea.up, ea.dn, eb.up, eb.dn};
    const double scale = std::max({ea.up, ea.dn, eb.up, eb.dn, 0.5});
    const double thermal = std::max(a.q.t, b.q.t);
    double val;
    try {
        val = integrate_semi_infinite([&](double e) { return mode(a, b, e); }, scale, thermal,
                                      fidelity_quadrature(), bp);
    } catch (const QuadratureError& e) {
        // the integrand's rounding-noise floor can sit above the target on
        // magnetic cells; the best estimate is still good far below the
        // 1e-10 degeneracy tolerance once scaled by the size
        if (e.error_bound > 4e-14) throw;
        val = e.best_estimate;
    }
    return size * val;
}

}  // namespace

double log_total_fidelity(const State& a, const State& b, double size) {
    return integrate_band(a, b, size,
                          [](const State& x, const State& y, double e) { return mode_log_fidelity(x, y, e); });
}

double log_total_partition_ratio(const State& a, const State& b, double size) {
    return integrate_band(a, b, size, [](const State& x, const State& y, double e) {
        return mode_log_partition_ratio(x, y, e);
    });
}

double log_route_difference(const State& a, const State& b, double size) {
    return integrate_band(a, b, size, [](const State& x, const State& y, double e) {
        return mode_log_partition_ratio(x, y, e) - mode_log_fidelity(x, y, e);
    });
}

FidelityResult total_fidelity(const Params& p) {
    if (p.size <= 0.0) throw DomainError("total_fidelity: size must be > 0");
    if (std::abs(p.du) > 0.1 || std::abs(p.dt) > 0.1)
        throw DomainError("total_fidelity: neighbor offsets must stay within 0.1");
    FidelityResult r;
    r.state_a = solve_equilibrium({p.t, p.u, 0.0});
    r.state_b = solve_equilibrium({p.t + p.dt, p.u + p.du, 0.0}, r.state_a);
    const double lf = log_total_fidelity(r.state_a, r.state_b, p.size);
    // C through the product-form route, anchored on the same panels as F by
    // integrating the per-mode route difference; the common quadrature error
    // cancels and the commuting-case degeneracy is measured at full
    // precision rather than at the panel floor.
    const double route_delta = log_route_difference(r.state_a, r.state_b, p.size);
    r.f = std::exp(lf);
    r.c = std::exp(lf + route_delta);
    return r;
}

double susceptibility_fd(const Params& p, double h_probe) {
    if (h_probe <= 0.0) throw DomainError("susceptibility_fd: h_probe must be > 0");
    const State base = solve_equilibrium({p.t, p.u, 0.0});
    if (base.branch != Branch::paramagnetic)
        throw DomainError("susceptibility_fd: requires the paramagnetic side (m = 0 at h_ext = 0)");
    const State plus = solve_equilibrium({p.t, p.u, h_probe}, base);
    const State minus = solve_equilibrium({p.t, p.u, -h_probe}, base);
    const double n_electrons = (4.0 / 3.0) * p.size;
    return n_electrons * (plus.m - minus.m) / (2.0 * h_probe);
}

}  // namespace phasefid::stoner
