#pragma once

#include <algorithm>
#include <cmath>

// Numerically stable scalar kernels shared by the closed-form trace
// identities. Everything here must stay finite for arguments up to
// |x| ~ 1e6 (beta up to 1e4 times mode energies of order 100).

namespace phasefid {

// ln(cosh x), exact for small x, overflow-free for large |x|.
inline double log_cosh(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-4) {
        const double x2 = x * x;
        return x2 / 2.0 - x2 * x2 / 12.0;
    }
    return ax + std::log1p(std::exp(-2.0 * ax)) - M_LN2;
}

// ln(sinh x) for x > 0.
inline double log_sinh(double x) {
    if (x < 1e-3) return std::log(x) + std::log1p(x * x / 6.0);
    return x + std::log1p(-std::exp(-2.0 * x)) - M_LN2;
}

// ln(e^a + e^b)
inline double log_sum_exp(double a, double b) {
    const double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(double a, double b, double c) {
    return log_sum_exp(log_sum_exp(a, b), c);
}

// ln(1 + e^x)
inline double softplus(double x) {
    if (x > 36.0) return x + std::exp(-x);
    if (x < -36.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// ln(1 + cosh x)  [= ln 2 + 2 ln cosh(x/2)]
inline double log1p_cosh(double x) { return M_LN2 + 2.0 * log_cosh(0.5 * x); }

// ln(cosh a + cosh b), both terms >= 1 so no cancellation.
inline double log_cosh_sum(double a, double b) {
    return log_sum_exp(log_cosh(a), log_cosh(b));
}

}  // namespace phasefid
