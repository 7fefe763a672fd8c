#include "phasefid/bcs.hpp"

#include <array>
#include <cmath>

#include "phasefid/stablemath.hpp"

namespace phasefid::bcs {

namespace {

const Quadrature& gap_quadrature() {
    static const Quadrature q{6000, 1e-13, 1e-300, 40.0};
    return q;
}

double tanh_ratio(double energy, double t) {
    // tanh(E/(2t))/E with the t = 0 and E -> 0 limits built in.
    if (t <= 0.0) return 1.0 / energy;
    const double x = energy / (2.0 * t);
    if (x > 20.0) return 1.0 / energy;
    if (x < 1e-8) return 1.0 / (2.0 * t);
    return std::tanh(x) / energy;
}

// Per-mode hyperbolic inputs: half-norms A = beta_a E_a, B = beta_b E_b and
// the direction cosine of the two Nambu vectors.
struct ModePair {
    double a;
    double b;
    double cos_theta;
};

ModePair mode_pair(const ModePoint& pa, const ModePoint& pb) {
    const double ea = std::sqrt(pa.eps * pa.eps + std::norm(pa.gap));
    const double eb = std::sqrt(pb.eps * pb.eps + std::norm(pb.gap));
    const double a = pa.beta * ea, b = pb.beta * eb;
    double ct = 1.0;
    if (a > 0.0 && b > 0.0) {
        const double dot = pa.eps * pb.eps + (pa.gap * std::conj(pb.gap)).real();
        ct = std::clamp(dot / (ea * eb), -1.0, 1.0);
    }
    return {a, b, ct};
}

// ln cosh of the composed generator: cosh c = cosh(A - B) +
// sinh A sinh B (1 + cos theta); both terms nonnegative.
double log_cosh_composed(double a, double b, double ct) {
    const double t1 = log_cosh(a - b);
    if (a <= 0.0 || b <= 0.0 || 1.0 + ct <= 0.0) return t1;
    return log_sum_exp(t1, log_sinh(a) + log_sinh(b) + std::log1p(ct));
}

double log_denominator_half(double a, double b) {
    return 0.5 * (log1p_cosh(a) + log1p_cosh(b));
}

double mode_log_f_pair(const ModePair& m) {
    const double lc = log_cosh_composed(m.a, m.b, m.cos_theta);
    // ln cosh(c/2) = (ln(1 + cosh c) - ln 2)/2, then ln(1 + cosh(c/2)).
    const double lch = 0.5 * (lc + std::log1p(std::exp(-lc)) - M_LN2);
    const double num = lch + std::log1p(std::exp(-lch));
    return num - log_denominator_half(m.a, m.b);
}

double mode_log_c_pair(const ModePair& m) {
    // |a + b|/4 = (1/2) sqrt((A - B)^2 + 2 A B (1 + cos theta)).
    const double d = m.a - m.b;
    const double s = 0.5 * std::sqrt(d * d + 2.0 * m.a * m.b * (1.0 + m.cos_theta));
    return log1p_cosh(s) - log_denominator_half(m.a, m.b);
}

double mode_log_h_pair(const ModePair& m) {
    // ln(1 + cosh(A/2)cosh(B/2) + sinh(A/2)sinh(B/2) cos theta)
    double num = log_sum_exp(0.0, log_cosh(0.5 * (m.a - m.b)));
    if (m.a > 0.0 && m.b > 0.0 && 1.0 + m.cos_theta > 0.0)
        num = log_sum_exp(num, log_sinh(0.5 * m.a) + log_sinh(0.5 * m.b) + std::log1p(m.cos_theta));
    return num - log_denominator_half(m.a, m.b);
}

// --- 2x2 I_t block machinery -----------------------------------------------

struct Mat2 {
    cplx a, b, c, d;  // [[a, b], [c, d]]
};

Mat2 mul(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

// e^{-s h} exp(s H) for H = (1/2)[[-v0, v+], [v-, v0]] with half-norm
// h = |v|/2; the positive scale factor drops out of the polar unitary.
Mat2 scaled_block_exp(const SpinVector& v, double s) {
    const double h = 0.5 * std::sqrt(std::max(v.norm2_raw().real(), 0.0));
    double coef_i, coef_h;  // result = coef_i I + coef_h [[-v0, v+], [v-, v0]]
    if (h < 1e-9) {
        coef_i = 1.0 - s * h;
        coef_h = 0.5 * s * (1.0 - s * h);
    } else {
        const double e = std::exp(-2.0 * s * h);
        coef_i = 0.5 * (1.0 + e);
        coef_h = 0.25 * (1.0 - e) / h;
    }
    return {coef_i - coef_h * v.zero, coef_h * v.plus, coef_h * v.minus, coef_i + coef_h * v.zero};
}

// Largest singular value of a 2x2 complex matrix. U - I of an SU(2) block
// has exactly degenerate singular values; there p^2 - q^2 is pure rounding
// noise and gets floored to zero instead of feeding sqrt-amplified error.
double sigma_max(const Mat2& m) {
    const double p = std::norm(m.a) + std::norm(m.b) + std::norm(m.c) + std::norm(m.d);
    const cplx det = m.a * m.d - m.b * m.c;
    const double q = 2.0 * std::abs(det);
    double disc = p * p - q * q;
    if (disc < (1e-14 * p) * p) disc = 0.0;
    const double s2 = 0.5 * (p + std::sqrt(std::max(disc, 0.0)));
    return std::sqrt(std::max(s2, 0.0));
}

// Polar unitary factor V with M = |M| V; deterministic completion when M is
// numerically rank deficient.
Mat2 polar_factor(const Mat2& m) {
    // Right singular vectors from the Hermitian Gram matrix M^dag M.
    const cplx g12 = std::conj(m.a) * m.b + std::conj(m.c) * m.d;
    const double g11 = std::norm(m.a) + std::norm(m.c);
    const double g22 = std::norm(m.b) + std::norm(m.d);
    const double diff = g11 - g22;
    const double rad = std::sqrt(diff * diff + 4.0 * std::norm(g12));
    // Dominant right singular vector (w1) through the cancellation-free
    // branch: l1 - g11 = (rad - diff)/2 loses digits when g11 dominates.
    cplx w1a, w1b;
    if (std::abs(g12) > 1e-300) {
        if (diff >= 0.0) {
            w1a = 0.5 * (rad + diff);  // = l1 - g22
            w1b = std::conj(g12);
        } else {
            w1a = g12;
            w1b = 0.5 * (rad - diff);  // = l1 - g11
        }
    } else if (g11 >= g22) {
        w1a = 1.0;
        w1b = 0.0;
    } else {
        w1a = 0.0;
        w1b = 1.0;
    }
    const double wn = std::sqrt(std::norm(w1a) + std::norm(w1b));
    w1a /= wn;
    w1b /= wn;
    const cplx w2a = -std::conj(w1b), w2b = std::conj(w1a);
    // Left vectors u_i = M w_i / sigma_i; completed when sigma underflows.
    cplx u1a = m.a * w1a + m.b * w1b, u1b = m.c * w1a + m.d * w1b;
    const double s1 = std::sqrt(std::norm(u1a) + std::norm(u1b));
    if (s1 > 1e-280) {
        u1a /= s1;
        u1b /= s1;
    } else {
        u1a = w1a;
        u1b = w1b;
    }
    cplx u2a = m.a * w2a + m.b * w2b, u2b = m.c * w2a + m.d * w2b;
    cplx proj = std::conj(u1a) * u2a + std::conj(u1b) * u2b;
    u2a -= proj * u1a;
    u2b -= proj * u1b;
    const double s2 = std::sqrt(std::norm(u2a) + std::norm(u2b));
    if (s2 > 1e-12 * std::max(s1, 1e-280)) {
        u2a /= s2;
        u2b /= s2;
    } else {
        // sigma_2 below the rounding floor of M w2: the column direction is
        // noise, take the deterministic orthogonal complement instead
        u2a = -std::conj(u1b);
        u2b = std::conj(u1a);
    }
    // V = u1 w1^dag + u2 w2^dag
    return {u1a * std::conj(w1a) + u2a * std::conj(w2a), u1a * std::conj(w1b) + u2a * std::conj(w2b),
            u1b * std::conj(w1a) + u2b * std::conj(w2a), u1b * std::conj(w1b) + u2b * std::conj(w2b)};
}

}  // namespace

double gap_residual(double v, double t, double gap) {
    if (v < 0.0 || t < 0.0) throw DomainError("gap_residual: v, t must be >= 0");
    const double d2 = gap * gap;
    const std::array<double, 3> bp{std::abs(gap), 2.0 * t, 10.0 * t};
    const double integral = integrate_finite(
        [d2, t](double x) { return tanh_ratio(std::sqrt(x * x + d2), t); }, 0.0, 1.0,
        gap_quadrature(), bp);
    return v * integral - 1.0;
}

GapState solve_gap(double v, double t) {
    if (v < 0.0 || t < 0.0) throw DomainError("solve_gap: v, t must be >= 0");
    GapState s;
    s.v = v;
    s.t = t;
    s.converged = true;
    if (v == 0.0) return s;
    const double floor = 1e-11;
    if (gap_residual(v, t, floor) <= 0.0) return s;  // normal phase
    SolverConfig cfg;
    cfg.step_tol = 1e-16;
    cfg.residual_tol = 1e-13;
    cfg.max_iter = 400;
    s.gap = solve_bracketed([&](double d) { return gap_residual(v, t, d); }, floor, 3.0, cfg);
    return s;
}

double critical_temperature(double v) {
    if (v <= 0.0) throw DomainError("critical_temperature: v must be > 0");
    SolverConfig cfg;
    cfg.step_tol = 1e-14;
    cfg.residual_tol = 1e-11;
    cfg.max_iter = 400;
    auto f = [&](double t) { return gap_residual(v, t, 0.0); };
    const double hi = 2.0;
    double lo = 1e-12;
    if (f(lo) <= 0.0) return 0.0;  // transition below resolvable temperatures
    return solve_bracketed(f, lo, hi, cfg);
}

SpinVector nambu_vector(const ModePoint& p) {
    return SpinVector::physical(2.0 * p.beta * std::conj(p.gap), -2.0 * p.beta * p.eps);
}

double mode_log_f(const ModePoint& a, const ModePoint& b) { return mode_log_f_pair(mode_pair(a, b)); }
double mode_log_c(const ModePoint& a, const ModePoint& b) { return mode_log_c_pair(mode_pair(a, b)); }
double mode_log_h(const ModePoint& a, const ModePoint& b) { return mode_log_h_pair(mode_pair(a, b)); }

double mode_uhl_dev(const ModePoint& a, const ModePoint& b) {
    const SpinVector va = nambu_vector(a), vb = nambu_vector(b);
    const Mat2 sq_a = scaled_block_exp(va, 0.5);  // ~ sqrt(e^{a.T}) on the block
    const Mat2 sq_b = scaled_block_exp(vb, 0.5);
    const Mat2 m = mul(sq_a, sq_b);
    const Mat2 vfac = polar_factor(m);
    // U = V^dag; the 2-norm of U - I equals that of V - I.
    const Mat2 dev{vfac.a - 1.0, vfac.b, vfac.c, vfac.d - 1.0};
    return sigma_max(dev);
}

ModeTriple mode_triple(const ModePoint& a, const ModePoint& b) {
    const ModePair m = mode_pair(a, b);
    ModeTriple r;
    r.f = std::exp(mode_log_f_pair(m));
    r.c = std::exp(mode_log_c_pair(m));
    r.h = std::exp(mode_log_h_pair(m));
    r.uhl_dev = mode_uhl_dev(a, b);
    return r;
}

const GaussRule& window_rule() {
    // Panels [2^-k-1, 2^-k] down to 2^-17, Gauss-Legendre 30 each; resolves
    // integrand structure on every scale of t and gap met by the sweeps.
    static const GaussRule rule = [] {
        const GaussRule base = gauss_legendre(30);
        GaussRule r;
        std::vector<double> edges{0.0};
        for (int k = 17; k >= 0; --k) edges.push_back(std::ldexp(1.0, -k));
        for (size_t p = 0; p + 1 < edges.size(); ++p) {
            const double a = edges[p], b = edges[p + 1];
            for (size_t i = 0; i < base.nodes.size(); ++i) {
                r.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * base.nodes[i]);
                r.weights.push_back(0.5 * (b - a) * base.weights[i]);
            }
        }
        return r;
    }();
    return rule;
}

namespace {

// Commuting-case per-mode ln factor outside the Debye window (gap = 0 on
// both sides); nonzero only when the temperatures differ.
double outside_log_factor(double x, double beta_a, double beta_b) {
    const double aa = beta_a * x, ab = beta_b * x;
    return log1p_cosh(0.5 * (aa + ab)) - 0.5 * (log1p_cosh(aa) + log1p_cosh(ab));
}

}  // namespace

FidelityResult total_fidelity(const Params& p) {
    if (p.t <= 0.0 || p.t + p.dt <= 0.0) throw DomainError("total_fidelity: requires t > 0");
    if (p.nu <= 0.0) throw DomainError("total_fidelity: nu must be > 0");
    FidelityResult r;
    r.state_a = solve_gap(p.v, p.t);
    r.state_b = solve_gap(p.v + p.dv, p.t + p.dt);
    const ModePoint base_a{1.0 / p.t, 0.0, cplx(r.state_a.gap, 0.0)};
    const ModePoint base_b{1.0 / (p.t + p.dt), 0.0, cplx(r.state_b.gap, 0.0)};
    const GaussRule& rule = window_rule();
    double lf = 0.0, lc = 0.0, lh = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        ModePoint ma = base_a, mb = base_b;
        ma.eps = rule.nodes[i];
        mb.eps = rule.nodes[i];
        const ModePair m = mode_pair(ma, mb);
        // Integrand is even in eps: weight covers +-eps.
        lf += 2.0 * rule.weights[i] * mode_log_f_pair(m);
        lc += 2.0 * rule.weights[i] * mode_log_c_pair(m);
        lh += 2.0 * rule.weights[i] * mode_log_h_pair(m);
    }
    if (p.dt != 0.0) {
        const double ba = 1.0 / p.t, bb = 1.0 / (p.t + p.dt);
        const double span = 40.0 * std::max(p.t, p.t + p.dt);
        const Quadrature q{4000, 1e-9, 1e-13, 40.0};
        const double tail =
            2.0 * integrate_finite([&](double x) { return outside_log_factor(x, ba, bb); }, 1.0,
                                   1.0 + span, q);
        lf += tail;
        lc += tail;
        lh += tail;
    }
    r.f = std::exp(p.nu * lf);
    r.c = std::exp(p.nu * lc);
    r.h = std::exp(p.nu * lh);
    return r;
}

double zero_t_fidelity(double va, double vb, double nu) {
    if (va < 0.0 || vb < 0.0) throw DomainError("zero_t_fidelity: couplings must be >= 0");
    const double da = solve_gap(va, 0.0).gap;
    const double db = solve_gap(vb, 0.0).gap;
    if (da == db) return 1.0;
    const GaussRule& rule = window_rule();
    double lnf = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
        const double x = rule.nodes[i];
        const double ea = std::sqrt(x * x + da * da), eb = std::sqrt(x * x + db * db);
        const double ratio = (x * x + da * db) / (ea * eb);
        lnf += 2.0 * rule.weights[i] * 0.5 * std::log(0.5 * (1.0 + ratio));
    }
    return std::exp(nu * lnf);
}

double block_two_norm(const DenseOperator& d) {
    const Mat2 b{d(0, 0), d(0, 3), d(3, 0), d(3, 3)};
    return sigma_max(b);
}

namespace {

DenseOperator dense_mode_state(const ModeOperators& ops, const ModePoint& p) {
    return gibbs_state(field_operator(ops, nambu_vector(p)));
}

}  // namespace

std::vector<UhlmannSample> uhlmann_profile(const Params& p, std::span<const double> eps_grid) {
    if (p.t <= 0.0 || p.t + p.dt <= 0.0) throw DomainError("uhlmann_profile: requires t > 0");
    const GapState sa = solve_gap(p.v, p.t);
    const GapState sb = solve_gap(p.v + p.dv, p.t + p.dt);
    const ModeOperators ops = build_mode_operators(ModeModel::bcs);
    std::vector<UhlmannSample> out;
    out.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        const ModePoint ma{1.0 / p.t, eps, cplx(sa.gap, 0.0)};
        const ModePoint mb{1.0 / (p.t + p.dt), eps, cplx(sb.gap, 0.0)};
        const DenseOperator rho_a = dense_mode_state(ops, ma);
        const DenseOperator rho_b = dense_mode_state(ops, mb);
        const PolarResult pol = polar_unitary(rho_a, rho_b);
        UhlmannSample s;
        s.eps = eps;
        s.degenerate = pol.degenerate;
        s.uhl_dev = block_two_norm(pol.unitary - DenseOperator::identity());
        // (H_k - F_k) - Tr[|M| (U - I)] is an exact operator identity.
        const DenseOperator m = dense_sqrt(rho_a) * dense_sqrt(rho_b);
        const SvdSystem sv = svd(m);
        DenseOperator abs_m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cplx acc{};
                for (int k = 0; k < 4; ++k)
                    acc += sv.u(i, k) * sv.sigma[static_cast<size_t>(k)] * std::conj(sv.u(j, k));
                abs_m(i, j) = acc;
            }
        const double h_k = m.trace().real();
        const double f_k = dense_fidelity(rho_a, rho_b);
        const double tr_term = (abs_m * (pol.unitary - DenseOperator::identity())).trace().real();
        s.identity_residual = std::abs((h_k - f_k) - tr_term);
        out.push_back(s);
    }
    return out;
}

DenseOperator loop_composition(std::span<const ParameterPoint> points, double eps) {
    if (points.size() < 3) throw DomainError("loop_composition: need at least 3 points");
    const ParameterPoint& first = points.front();
    const ParameterPoint& last = points.back();
    if (first.t != last.t || first.coupling != last.coupling)
        throw DomainError("loop_composition: loop must be closed (first == last)");
    const ModeOperators ops = build_mode_operators(ModeModel::bcs);
    std::vector<DenseOperator> states;
    states.reserve(points.size());
    for (const auto& q : points) {
        if (q.t <= 0.0) throw DomainError("loop_composition: requires t > 0 at all points");
        const GapState g = solve_gap(q.coupling, q.t);
        states.push_back(dense_mode_state(ops, ModePoint{1.0 / q.t, eps, cplx(g.gap, 0.0)}));
    }
    DenseOperator total = DenseOperator::identity();
    for (size_t i = 0; i + 1 < states.size(); ++i)
        total = polar_unitary(states[i], states[i + 1]).unitary * total;
    return total;
}

}  // namespace phasefid::bcs
