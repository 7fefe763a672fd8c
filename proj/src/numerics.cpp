#include "phasefid/numerics.hpp"

#include <cmath>

namespace phasefid {

namespace {

double inf_norm(std::span<const double> v) {
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
}

// Gaussian elimination with partial pivoting; a is n x n row-major.
// Returns false when the matrix is numerically singular.
bool lu_solve(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
    const size_t n = b.size();
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[perm[r] * n + col]) > std::abs(a[perm[piv] * n + col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = a[perm[col] * n + col];
        if (std::abs(d) < 1e-300) return false;
        for (size_t r = col + 1; r < n; ++r) {
            const double f = a[perm[r] * n + col] / d;
            if (f == 0.0) continue;
            for (size_t c = col; c < n; ++c) a[perm[r] * n + c] -= f * a[perm[col] * n + c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }
    x.assign(n, 0.0);
    for (size_t i = n; i-- > 0;) {
        double s = b[perm[i]];
        for (size_t c = i + 1; c < n; ++c) s -= a[perm[i] * n + c] * x[c];
        x[i] = s / a[perm[i] * n + i];
    }
    return true;
}

}  // namespace

namespace {

void validate(const SolverConfig& cfg, const char* who) {
    if (cfg.max_iter < 1 || cfg.step_tol <= 0.0 || cfg.residual_tol <= 0.0 || cfg.fd_step <= 0.0)
        throw SolveError(std::string(who) + ": config out of range", {}, 0.0);
}

}  // namespace

std::vector<double> solve_system(const SystemFn& residual, std::span<const double> initial,
                                 const SolverConfig& cfg) {
    validate(cfg, "solve_system");
    std::vector<double> x(initial.begin(), initial.end());
    const size_t n = x.size();
    std::vector<double> r = residual(x);
    if (r.size() != n) throw SolveError("solve_system: residual dimension mismatch", x, inf_norm(r));
    double rn = inf_norm(r);
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (rn <= cfg.residual_tol) return x;
        // Forward-difference Jacobian, step sqrt(eps) * max(1, |x_i|).
        std::vector<double> jac(n * n);
        for (size_t j = 0; j < n; ++j) {
            const double h = cfg.fd_step * std::max(1.0, std::abs(x[j]));
            std::vector<double> xp = x;
            xp[j] += h;
            const std::vector<double> rp = residual(xp);
            for (size_t i = 0; i < n; ++i) jac[i * n + j] = (rp[i] - r[i]) / h;
        }
        std::vector<double> neg_r(n), step;
        for (size_t i = 0; i < n; ++i) neg_r[i] = -r[i];
        bool have_step = lu_solve(jac, neg_r, step);
        if (!have_step) {
            // Singular Jacobian: retreat to a scaled steepest-descent-like step.
            step = neg_r;
            const double sn = inf_norm(step);
            if (sn > 0.0)
                for (double& s : step) s /= sn;
        }
        bool accepted = false;
        double lambda = 1.0;
        std::vector<double> xt(n), rt;
        while (lambda >= cfg.damping_min) {
            for (size_t i = 0; i < n; ++i) xt[i] = x[i] + lambda * step[i];
            rt = residual(xt);
            const double rtn = inf_norm(rt);
            if (rtn < rn * (1.0 - 1e-4 * lambda) || rtn <= cfg.residual_tol) {
                const double step_size = lambda * inf_norm(step);
                x = xt;
                r = rt;
                rn = rtn;
                accepted = true;
                if (step_size < cfg.step_tol && rn > cfg.residual_tol)
                    throw SolveError("solve_system: stagnated below step tolerance", x, rn);
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            // Coordinate bisection fallback: for each coordinate, look for a
            // sign change of r_i along e_i and bisect it.
            bool improved = false;
            for (size_t i = 0; i < n && !improved; ++i) {
                const double span = 0.5 * std::max(1.0, std::abs(x[i]));
                double lo = x[i] - span, hi = x[i] + span;
                auto fi = [&](double xi) {
                    std::vector<double> xv = x;
                    xv[i] = xi;
                    return residual(xv)[i];
                };
                double flo = fi(lo), fhi = fi(hi);
                if (flo * fhi > 0.0) continue;
                for (int b = 0; b < 40; ++b) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = fi(mid);
                    if (flo * fm <= 0.0) {
                        hi = mid;
                        fhi = fm;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                std::vector<double> xv = x;
                xv[i] = 0.5 * (lo + hi);
                const std::vector<double> rv = residual(xv);
                const double rvn = inf_norm(rv);
                if (rvn < rn) {
                    x = xv;
                    r = rv;
                    rn = rvn;
                    improved = true;
                }
            }
            if (!improved) throw SolveError("solve_system: no descent direction", x, rn);
        }
    }
    if (rn <= cfg.residual_tol) return x;
    throw SolveError("solve_system: iteration budget exhausted", x, rn);
}

double solve_bracketed(const std::function<double(double)>& f, double lo, double hi,
                       const SolverConfig& cfg) {
    validate(cfg, "solve_bracketed");
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw SolveError("solve_bracketed: no sign change", {lo, hi}, std::min(std::abs(flo), std::abs(fhi)));
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (hi - lo <= cfg.step_tol) break;
        // Secant candidate, accepted only if it lands strictly inside and
        // away from the endpoints; otherwise bisect.
        double mid = 0.5 * (lo + hi);
        const double denom = fhi - flo;
        if (denom != 0.0) {
            const double sec = (lo * fhi - hi * flo) / denom;
            const double margin = 0.01 * (hi - lo);
            if (sec > lo + margin && sec < hi - margin) mid = sec;
        }
        const double fm = f(mid);
        if (fm == 0.0 || std::abs(fm) <= cfg.residual_tol) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

GaussRule gauss_legendre(int n) {
    GaussRule r;
    r.nodes.resize(static_cast<size_t>(n));
    r.weights.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[static_cast<size_t>(n - 1 - i)] = x;
        r.weights[static_cast<size_t>(n - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

}  // namespace phasefid
