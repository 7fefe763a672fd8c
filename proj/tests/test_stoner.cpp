#include <doctest.h>

#include <cmath>
#include <random>

#include "phasefid/algebra.hpp"
#include "phasefid/oracle.hpp"
#include "phasefid/stoner.hpp"

using namespace phasefid;

namespace {

// Brute-force oracle for the T = 0 magnetic branch: scan the cubic
// s^3 - (9/(4u)) s^2 + 1 on [2^(1/3), 2] and bisect the sign change.
stoner::FermiMomenta cubic_oracle(double u) {
    auto f = [u](double s) { return s * s * s - 9.0 / (4.0 * u) * s * s + 1.0; };
    double lo = std::cbrt(2.0), hi = 2.0;
    const int nscan = 4000;
    double s_lo = lo, s_hi = hi;
    for (int i = 0; i < nscan; ++i) {
        const double a = lo + (hi - lo) * i / nscan;
        const double b = lo + (hi - lo) * (i + 1) / nscan;
        if (f(a) * f(b) <= 0.0) {
            s_lo = a;
            s_hi = b;
            break;
        }
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (s_lo + s_hi);
        (f(s_lo) * f(mid) <= 0.0 ? s_hi : s_lo) = mid;
    }
    const double s = 0.5 * (s_lo + s_hi);
    const double p = s * s - 1.5 * s / u;
    const double d = std::sqrt(std::max(s * s - 4.0 * p, 0.0));
    return {0.5 * (s + d), 0.5 * (s - d)};
}

double magnetization_of(const stoner::FermiMomenta& k) {
    return (k.x * k.x * k.x - k.y * k.y * k.y) / 4.0;
}

}  // namespace

TEST_CASE("zero_t_solve: trivial, tangent, magnetic and polarized branches") {
    const auto para = stoner::zero_t_solve(0.8);
    CHECK(para.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(para.y == doctest::Approx(1.0).epsilon(1e-14));
    const auto tangent = stoner::zero_t_solve(1.0);
    CHECK(tangent.x == doctest::Approx(1.0).epsilon(1e-14));
    for (double u : {1.02, 1.05, 1.1, 1.15}) {
        const auto k = stoner::zero_t_solve(u);
        const auto o = cubic_oracle(u);
        CHECK(k.x == doctest::Approx(o.x).epsilon(1e-9));
        CHECK(k.y == doctest::Approx(o.y).epsilon(1e-9));
        CHECK(k.x > k.y);
        CHECK(k.x * k.x * k.x + k.y * k.y * k.y == doctest::Approx(2.0).epsilon(1e-10));
        // original pair of equations
        CHECK(k.x + k.y ==
              doctest::Approx((2.0 * u / 3.0) * (k.x * k.x + k.x * k.y + k.y * k.y)).epsilon(1e-10));
        // magnetic branch has lower ground energy than the balanced one
        CHECK(stoner::ground_energy(u, magnetization_of(k)) < stoner::ground_energy(u, 0.0));
    }
    const auto pol = stoner::zero_t_solve(stoner::full_polarization_u + 1e-9);
    CHECK(pol.x == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
    CHECK(pol.y == doctest::Approx(0.0).epsilon(1e-12));
    // y -> 0 continuously at the polarization onset
    const auto before = stoner::zero_t_solve(stoner::full_polarization_u - 1e-6);
    CHECK(before.y < 2e-3);
    CHECK(before.y > 0.0);
}

TEST_CASE("zero_t_derivatives: divergence at u_c and finite-difference agreement") {
    CHECK_THROWS_AS(stoner::zero_t_derivatives(0.9), stoner::DomainError);
    for (double u : {1.01, 1.05, 1.1, 1.2, 1.3}) {
        const auto [dx, dy] = stoner::zero_t_derivatives(u);
        const double h = 1e-6;
        const auto kp = stoner::zero_t_solve(u + h);
        const auto km = stoner::zero_t_solve(u - h);
        const double fdx = (kp.x - km.x) / (2.0 * h);
        const double fdy = (kp.y - km.y) / (2.0 * h);
        CHECK(std::abs(dx - fdx) <= 0.01 * std::max(std::abs(dx), 1e-12));
        CHECK(std::abs(dy - fdy) <= 0.01 * std::max(std::abs(dy), 1e-12));
        if (u < stoner::full_polarization_u) {
            CHECK(dx > 0.0);
            CHECK(dy < 0.0);
        } else {
            CHECK(dx == 0.0);  // saturated branch
            CHECK(dy == 0.0);
        }
    }
    // derivative diverges approaching u_c from above
    const double d7 = stoner::zero_t_derivatives(1.0 + 1e-7).first;
    const double d5 = stoner::zero_t_derivatives(1.0 + 1e-5).first;
    const double d3 = stoner::zero_t_derivatives(1.0 + 1e-3).first;
    CHECK(d7 > 1e3);
    CHECK(d7 > d5);
    CHECK(d5 > d3);
    // dx/du (x - y) stays finite and smooth on the branch
    for (double u : {1.05, 1.1, 1.15}) {
        const auto k = stoner::zero_t_solve(u);
        const auto [dx, dy] = stoner::zero_t_derivatives(u);
        CHECK(std::isfinite(dx * (k.x - k.y)));
        CHECK(std::abs(dx * (k.x - k.y)) < 10.0);
    }
}

TEST_CASE("ground_energy: Stoner criterion from the energy landscape") {
    for (double u : {0.2, 0.7, 1.0, 1.2, 1.4}) {
        const double h = 1e-5;
        const double d1 = (stoner::ground_energy(u, h) - stoner::ground_energy(u, -h)) / (2.0 * h);
        CHECK(std::abs(d1) < 1e-9);  // dE/dm (m = 0) = 0 for every u
        CHECK(stoner::ground_energy(u, 0.3) ==
              doctest::Approx(stoner::ground_energy(u, -0.3)).epsilon(1e-14));
    }
    // d2E/dm2 at m = 0 changes sign precisely at u = 1
    auto curvature = [](double u) {
        const double h = 1e-4;
        return (stoner::ground_energy(u, h) - 2.0 * stoner::ground_energy(u, 0.0) +
                stoner::ground_energy(u, -h)) /
               (h * h);
    };
    CHECK(curvature(0.99) > 0.0);
    CHECK(curvature(1.01) < 0.0);
    CHECK(std::abs(curvature(1.0)) < 1e-4);
    // minimizer of the energy agrees with the zero_t_solve branch on a scan
    for (int i = 0; i <= 30; ++i) {
        const double u = 1.5 * i / 30.0;
        double best_m = 0.0, best_e = stoner::ground_energy(u, 0.0);
        for (int j = 0; j <= 5000; ++j) {
            const double m = 0.5 * j / 5000.0;
            const double e = stoner::ground_energy(u, m);
            if (e < best_e) {
                best_e = e;
                best_m = m;
            }
        }
        const double want = magnetization_of(stoner::zero_t_solve(u));
        CHECK(std::abs(best_m - want) <= 2e-3);
    }
}

TEST_CASE("ground_state_overlap is one or zero at the state granularity") {
    const auto a = stoner::zero_t_solve(0.9);
    const auto b = stoner::zero_t_solve(0.95);
    CHECK(stoner::ground_state_overlap(a, a, 750.0) == 1.0);
    CHECK(stoner::ground_state_overlap(a, b, 750.0) == 1.0);  // both paramagnetic
    const auto c = stoner::zero_t_solve(0.99);
    const auto d = stoner::zero_t_solve(1.01);
    CHECK(stoner::ground_state_overlap(c, d, 750.0) == 0.0);  // orthogonal across u_c
}

TEST_CASE("solve_equilibrium: branches, residuals, limits") {
    CHECK_THROWS_AS(stoner::solve_equilibrium({0.0, 0.5, 0.0}), stoner::DomainError);
    for (double t : {0.05, 0.3}) {
        const auto s = stoner::solve_equilibrium({t, 0.5, 0.0});
        CHECK(s.m == 0.0);
        CHECK(s.branch == stoner::Branch::paramagnetic);
        CHECK(s.converged);
    }
    // spec example point: (t, u) = (0.05, 1.1) seeded from the T = 0 solution
    {
        const auto k0 = stoner::zero_t_solve(1.1);
        stoner::State seed;
        seed.q = {0.05, 1.1, 0.0};
        seed.m = magnetization_of(k0);
        seed.mu = 1.6;
        seed.converged = true;
        const auto s = stoner::solve_equilibrium({0.05, 1.1, 0.0}, seed);
        CHECK(s.branch == stoner::Branch::magnetic);
        const double aup = s.mu - (4.0 / 3.0) * 1.1 * (0.5 - s.m);
        const double adn = s.mu - (4.0 / 3.0) * 1.1 * (0.5 + s.m);
        const double iu = stoner::fermi_integral(aup, 0.05);
        const double id = stoner::fermi_integral(adn, 0.05);
        CHECK(std::abs(0.75 * (iu + id) - 1.0) <= 1e-10);
        CHECK(std::abs(0.375 * (iu - id) - s.m) <= 1e-10);
    }
    // T -> 0 limit reproduces the Appendix-1 magnetization
    const double m0 = magnetization_of(stoner::zero_t_solve(1.05));
    const auto cold = stoner::solve_equilibrium({1e-3, 1.05, 0.0});
    CHECK(std::abs(cold.m - m0) <= 1e-3);
    CHECK(cold.m >= 0.0);
    // u large: full polarization
    const auto strong = stoner::solve_equilibrium({0.05, 6.0, 0.0});
    CHECK(strong.m == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("free energy at low temperature matches the ground-state energy") {
    // F/n -> (4/3) E_g/(N eps_F) as t -> 0; joint check of the rescalings
    for (double u : {0.5, 1.05, 1.15}) {
        const auto s = stoner::solve_equilibrium({1e-3, u, 0.0});
        const double f_per_n = stoner::free_energy(s);
        const double eg = stoner::ground_energy(u, s.m);
        CHECK(f_per_n == doctest::Approx((4.0 / 3.0) * eg).epsilon(2e-4));
    }
}

TEST_CASE("mode_log_fidelity: zero cases, negativity, dense oracle") {
    const auto a = stoner::solve_equilibrium({0.05, 1.02, 0.0});
    const auto b = stoner::solve_equilibrium({0.05, 1.02 + 2e-3, 0.0}, a);
    CHECK(stoner::mode_log_fidelity(a, a, 1.0) == 0.0);
    CHECK(stoner::mode_log_fidelity(b, b, 0.3) == 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ed(0.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const double eps = ed(rng);
        CHECK(stoner::mode_log_fidelity(a, b, eps) <= 1e-14);
        // the cosh and product-form routes agree
        const double lf = stoner::mode_log_fidelity(a, b, eps);
        const double lc = stoner::mode_log_partition_ratio(a, b, eps);
        CHECK(std::abs(lf - lc) <= 1e-13 + 1e-12 * std::abs(lf));
    }
    // dense 4x4 oracle at eps = 1
    const ModeOperators ops = build_mode_operators(ModeModel::stoner);
    auto dense_state = [&](const stoner::State& s, double eps) {
        const double alpha = -(eps + (2.0 / 3.0) * s.q.u - s.mu) / s.q.t;
        const double w = (8.0 / 3.0) * s.q.u * s.m / s.q.t;
        return gibbs_state(cplx(alpha) * ops.number +
                           field_operator(ops, SpinVector::physical(0.0, w)));
    };
    const double closed = std::exp(stoner::mode_log_fidelity(a, b, 1.0));
    const double dense = dense_fidelity(dense_state(a, 1.0), dense_state(b, 1.0));
    CHECK(closed == doctest::Approx(dense).epsilon(1e-10));
}

TEST_CASE("total_fidelity: identity, deep paramagnet, dip near the line, C == F") {
    const auto same = stoner::total_fidelity({0.05, 0.8, 750.0, 0.0, 0.0});
    CHECK(same.f == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.c == doctest::Approx(1.0).epsilon(1e-12));
    const auto deep = stoner::total_fidelity({0.3, 0.5, 750.0, 0.0, 2e-3});
    CHECK(deep.f > 0.9999);
    CHECK(std::abs(deep.c - deep.f) <= 1e-10);
    // local minimum of F in u within one grid step of the onset at t = 0.05
    const double du_grid = 5e-3;
    double u_c;
    {
        double lo = 1.0, hi = 1.1;
        while (hi - lo > 1e-7) {
            const double mid = 0.5 * (lo + hi);
            (stoner::solve_equilibrium({0.05, mid, 0.0}).m > 1e-6 ? hi : lo) = mid;
        }
        u_c = 0.5 * (lo + hi);
    }
    double fmin = 2.0, umin = 0.0;
    for (int i = -6; i <= 6; ++i) {
        const double u = u_c + du_grid * i;
        const auto r = stoner::total_fidelity({0.05, u, 750.0, 0.0, 2e-3});
        CHECK(std::abs(r.c - r.f) <= 1e-10);  // commuting case on every cell
        if (r.f < fmin) {
            fmin = r.f;
            umin = u;
        }
    }
    CHECK(std::abs(umin - u_c) <= du_grid + 1e-9);
    CHECK(fmin < 0.999);
    // symmetry under exchanging the two parameter points
    const auto fwd = stoner::total_fidelity({0.05, u_c, 750.0, 0.0, 2e-3});
    const auto bwd = stoner::total_fidelity({0.05, u_c + 2e-3, 750.0, 0.0, -2e-3});
    CHECK(fwd.f == doctest::Approx(bwd.f).epsilon(1e-9));
    // invariance under m -> -m applied to both states
    stoner::State fa = fwd.state_a, fb = fwd.state_b;
    const double base = stoner::mode_log_fidelity(fa, fb, 0.7);
    fa.m = -fa.m;
    fb.m = -fb.m;
    CHECK(stoner::mode_log_fidelity(fa, fb, 0.7) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("neighbor offsets are bounded") {
    CHECK_THROWS_AS(stoner::total_fidelity({0.05, 1.0, 750.0, 0.0, 0.2}), stoner::DomainError);
    CHECK_THROWS_AS(stoner::total_fidelity({0.05, 1.0, 750.0, 0.11, 0.0}), stoner::DomainError);
    CHECK_THROWS_AS(stoner::total_fidelity({0.05, 1.0, -1.0, 0.0, 2e-3}), stoner::DomainError);
}

TEST_CASE("susceptibility_fd: Pauli value, divergence toward u_c") {
    const double chi0 = stoner::susceptibility_fd({0.05, 0.0, 750.0}, 1e-5);
    CHECK(chi0 == doctest::Approx(375.0).epsilon(5e-3));  // n/2 at low t
    double prev = chi0;
    for (double u : {0.5, 0.9, 0.99, 0.999}) {
        const double chi = stoner::susceptibility_fd({0.05, u, 750.0}, 1e-7);
        CHECK(chi > prev);  // monotone growth toward the transition
        prev = chi;
    }
    CHECK(prev > 100.0 * chi0);
    CHECK_THROWS_AS(stoner::susceptibility_fd({0.05, 1.2, 750.0}, 1e-5), stoner::DomainError);
}

TEST_CASE("per-mode closed form equals the dense oracle on seeded draws") {
    const auto r = oracle::run_stoner_suite(20240817, 1000);
    CHECK(r.draws >= 1000);
    CHECK(r.max_deviation <= 1e-10);
}
