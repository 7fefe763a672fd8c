#include "phasefid/oracle.hpp"

#include <cmath>
#include <random>

#include "phasefid/algebra.hpp"
#include "phasefid/bcs.hpp"
#include "phasefid/stoner.hpp"

namespace phasefid::oracle {

namespace {

double rel_dev(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Dense Tr[e^X] through the eigen-based exponential.
double dense_trace_exp(const DenseOperator& x) { return dense_exp(x).trace().real(); }

}  // namespace

SuiteResult run_algebra_suite(std::uint64_t seed, int draws, Corruption corrupt) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-8.0, 8.0);
    const ModeOperators s_ops = build_mode_operators(ModeModel::stoner);
    const ModeOperators t_ops = build_mode_operators(ModeModel::bcs);
    const double fudge = corrupt == Corruption::trace_formula ? 1.0 + 1e-6 : 1.0;
    SuiteResult r{"algebra trace identities", 0.0, draws};
    for (int i = 0; i < draws; ++i) {
        const SpinVector h = SpinVector::physical(cplx(amp(rng), amp(rng)), amp(rng));
        const double alpha = 0.5 * amp(rng);

        const double spin_closed = fudge * trace_exp_spin(h);
        const double spin_dense = dense_trace_exp(field_operator(s_ops, h));
        r.max_deviation = std::max(r.max_deviation, rel_dev(spin_closed, spin_dense));

        const double ns_closed = fudge * trace_exp_number_spin(alpha, h);
        const double ns_dense =
            dense_trace_exp(cplx(alpha) * s_ops.number + field_operator(s_ops, h));
        r.max_deviation = std::max(r.max_deviation, rel_dev(ns_closed, ns_dense));
        r.max_deviation =
            std::max(r.max_deviation, rel_dev(log_trace_exp_number_spin(alpha, h), std::log(ns_dense)));

        const SpinVector a = SpinVector::physical(cplx(amp(rng), amp(rng)), amp(rng));
        const double nb_closed = fudge * trace_exp_nambu(a);
        const double nb_dense = dense_trace_exp(field_operator(t_ops, a));
        r.max_deviation = std::max(r.max_deviation, rel_dev(nb_closed, nb_dense));

        // cosh c via Tr[e^{a.T/2} e^{b.T} e^{a.T/2}] = 2(1 + cosh c).
        const SpinVector b = SpinVector::physical(cplx(amp(rng), amp(rng)), amp(rng));
        const DenseOperator half = dense_exp(field_operator(t_ops, 0.5 * a));
        const DenseOperator mid = dense_exp(field_operator(t_ops, b));
        const double tr = (half * mid * half).trace().real();
        const double dense_cosh_c = 0.5 * tr - 1.0;
        const double closed_cosh_c = fudge * cosh_c(a, b);
        r.max_deviation =
            std::max(r.max_deviation, std::abs(closed_cosh_c - dense_cosh_c) / std::abs(dense_cosh_c));
    }
    return r;
}

SuiteResult run_stoner_suite(std::uint64_t seed, int draws, Corruption corrupt) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> tdraw(0.02, 0.4);
    std::uniform_real_distribution<double> udraw(0.2, 1.5);
    std::uniform_real_distribution<double> edraw(0.0, 4.0);
    const ModeOperators ops = build_mode_operators(ModeModel::stoner);
    const double fudge = corrupt == Corruption::trace_formula ? 1.0 + 1e-6 : 1.0;
    SuiteResult r{"stoner per-mode fidelity vs dense", 0.0, draws};
    const int pairs = std::max(1, draws / 50);
    int done = 0;
    for (int p = 0; p < pairs && done < draws; ++p) {
        const double t = tdraw(rng);
        const double u = udraw(rng);
        const stoner::State a = stoner::solve_equilibrium({t, u, 0.0});
        const stoner::State b = stoner::solve_equilibrium({t + 1e-3, u + 2e-3, 0.0}, a);
        auto exponent = [&](const stoner::State& s, double eps) {
            const double alpha = -(eps + (2.0 / 3.0) * s.q.u - s.mu) / s.q.t;
            const double w = (8.0 / 3.0) * s.q.u * s.m / s.q.t;
            return cplx(alpha) * ops.number + field_operator(ops, SpinVector::physical(0.0, w));
        };
        for (int k = 0; k < 50 && done < draws; ++k, ++done) {
            const double eps = edraw(rng);
            const double closed = fudge * std::exp(stoner::mode_log_fidelity(a, b, eps));
            const double dense =
                dense_fidelity(gibbs_state(exponent(a, eps)), gibbs_state(exponent(b, eps)));
            r.max_deviation = std::max(r.max_deviation, rel_dev(closed, dense));
        }
    }
    r.draws = done;
    return r;
}

SuiteResult run_bcs_suite(std::uint64_t seed, int draws, Corruption corrupt) {
    std::mt19937_64 rng(seed);
    // beta E <= ~10 keeps the dense oracle itself accurate to 1e-10: the
    // smallest Gibbs weight e^{-2 beta E} must stay well above the eigen
    // noise floor or its square root pollutes the dense traces at sqrt(eps).
    std::uniform_real_distribution<double> beta(0.5, 6.0);
    std::uniform_real_distribution<double> eps(-1.5, 1.5);
    std::uniform_real_distribution<double> gap(0.0, 0.6);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    const ModeOperators ops = build_mode_operators(ModeModel::bcs);
    const double fudge = corrupt == Corruption::trace_formula ? 1.0 + 1e-6 : 1.0;
    SuiteResult r{"bcs per-mode F/C/H vs dense", 0.0, draws};
    for (int i = 0; i < draws; ++i) {
        // Complex gap phases exercise the Re[gap_a conj(gap_b)] dependence.
        const bcs::ModePoint a{beta(rng), eps(rng), std::polar(gap(rng), phase(rng))};
        const bcs::ModePoint b{beta(rng), eps(rng), std::polar(gap(rng), phase(rng))};
        const DenseOperator rho_a = gibbs_state(field_operator(ops, bcs::nambu_vector(a)));
        const DenseOperator rho_b = gibbs_state(field_operator(ops, bcs::nambu_vector(b)));
        const bcs::ModeTriple triple = bcs::mode_triple(a, b);

        const double f_dense = dense_fidelity(rho_a, rho_b);
        r.max_deviation = std::max(r.max_deviation, rel_dev(fudge * triple.f, f_dense));

        const double h_dense = (dense_sqrt(rho_a) * dense_sqrt(rho_b)).trace().real();
        r.max_deviation = std::max(r.max_deviation, rel_dev(fudge * triple.h, h_dense));

        const SpinVector mean = 0.5 * (bcs::nambu_vector(a) + bcs::nambu_vector(b));
        const double c_dense =
            dense_trace_exp(field_operator(ops, mean)) /
            std::sqrt(dense_trace_exp(field_operator(ops, bcs::nambu_vector(a))) *
                      dense_trace_exp(field_operator(ops, bcs::nambu_vector(b))));
        r.max_deviation = std::max(r.max_deviation, rel_dev(fudge * triple.c, c_dense));

        // Fast 2x2 Uhlmann deviation against the dense 4x4 polar route.
        const PolarResult pol = polar_unitary(rho_a, rho_b);
        if (!pol.degenerate) {
            const DenseOperator du = pol.unitary - DenseOperator::identity();
            double frob2 = 0.0;
            for (int rr = 0; rr < 4; ++rr)
                for (int cc = 0; cc < 4; ++cc)
                    if ((rr == 0 || rr == 3) && (cc == 0 || cc == 3)) frob2 += std::norm(du(rr, cc));
            // 2-norm of a 2x2 block bounded by its Frobenius norm; compare
            // against it loosely, exact comparison happens in unit tests.
            const double dev = triple.uhl_dev;
            const double frob = std::sqrt(frob2);
            if (dev > frob + 1e-8) r.max_deviation = std::max(r.max_deviation, dev - frob);
        }
    }
    return r;
}

std::vector<SuiteResult> run_all(std::uint64_t seed, int draws, Corruption corrupt) {
    return {run_algebra_suite(seed, draws, corrupt), run_stoner_suite(seed + 1, draws, corrupt),
            run_bcs_suite(seed + 2, draws, corrupt)};
}

}  // namespace phasefid::oracle
