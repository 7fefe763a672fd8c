#include "phasefid/algebra.hpp"

#include <cmath>

#include "phasefid/stablemath.hpp"

namespace phasefid {

namespace {

// Half-norm hyperbolics with the h -> 0 limit taken analytically; the
// closed forms never divide by the norm.
double safe_norm(const SpinVector& h, const char* who) {
    const cplx n2 = h.norm2_raw();
    const double scale = std::abs(n2);
    if (std::abs(n2.imag()) > 1e-10 * std::max(1.0, scale) || n2.real() < -1e-10 * std::max(1.0, scale))
        throw AlgebraError(std::string(who) + ": non-physical vector (complex norm^2)");
    return std::sqrt(std::max(n2.real(), 0.0));
}

}  // namespace

bool SpinVector::is_physical(double tol) const {
    const double scale = std::max({1.0, std::abs(plus), std::abs(minus)});
    return std::abs(minus - std::conj(plus)) <= tol * scale;
}

double SpinVector::norm() const { return safe_norm(*this, "norm"); }

cplx vec_dot(const SpinVector& a, const SpinVector& b) {
    return 0.5 * (a.plus * b.minus + a.minus * b.plus) + a.zero * b.zero;
}

double trace_exp_spin(const SpinVector& h) {
    const double n = safe_norm(h, "trace_exp_spin");
    return 2.0 * (1.0 + std::cosh(0.5 * n));
}

double trace_exp_number_spin(double alpha, const SpinVector& h) {
    const double n = safe_norm(h, "trace_exp_number_spin");
    if (std::abs(alpha) > 500.0 || n > 1000.0)
        throw AlgebraError("trace_exp_number_spin: overflow, use log_trace_exp_number_spin");
    return 2.0 * std::exp(alpha) * (std::cosh(alpha) + std::cosh(0.5 * n));
}

double log_trace_exp_number_spin(double alpha, const SpinVector& h) {
    const double n = safe_norm(h, "log_trace_exp_number_spin");
    return M_LN2 + alpha + log_cosh_sum(alpha, 0.5 * n);
}

double trace_exp_nambu(const SpinVector& a) {
    const double n = safe_norm(a, "trace_exp_nambu");
    return 2.0 * (1.0 + std::cosh(0.5 * n));
}

double log_trace_exp_nambu(const SpinVector& a) {
    const double n = safe_norm(a, "log_trace_exp_nambu");
    return M_LN2 + log1p_cosh(0.5 * n);
}

double cosh_c(const SpinVector& a, const SpinVector& b) {
    const double lc = log_cosh_c(a, b);
    if (lc > 700.0) throw AlgebraError("cosh_c: overflow, use log_cosh_c");
    return std::exp(lc);
}

double log_cosh_c(const SpinVector& a, const SpinVector& b) {
    const double na = safe_norm(a, "cosh_c");
    const double nb = safe_norm(b, "cosh_c");
    if (na == 0.0) return log_cosh(0.5 * nb);
    if (nb == 0.0) return log_cosh(0.5 * na);
    const cplx dot = vec_dot(a, b);
    if (std::abs(dot.imag()) > 1e-10 * std::max(1.0, std::abs(dot)))
        throw AlgebraError("cosh_c: complex scalar product");
    double ct = dot.real() / (na * nb);
    ct = std::clamp(ct, -1.0, 1.0);
    // cosh c = cosh((a-b)/2) + sinh(a/2) sinh(b/2) (1 + cos theta); both
    // terms are nonnegative, so the antiparallel case does not cancel.
    const double term1 = log_cosh(0.5 * (na - nb));
    if (1.0 + ct <= 0.0) return term1;
    const double term2 = log_sinh(0.5 * na) + log_sinh(0.5 * nb) + std::log1p(ct);
    return log_sum_exp(term1, term2);
}

// ---------------------------------------------------------------------------
// Dense 4x4 machinery
// ---------------------------------------------------------------------------

DenseOperator DenseOperator::identity() {
    DenseOperator r;
    for (int i = 0; i < 4; ++i) r(i, i) = 1.0;
    return r;
}

DenseOperator DenseOperator::adjoint() const {
    DenseOperator r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r(i, j) = std::conj((*this)(j, i));
    return r;
}

cplx DenseOperator::trace() const {
    return (*this)(0, 0) + (*this)(1, 1) + (*this)(2, 2) + (*this)(3, 3);
}

double DenseOperator::frobenius_norm() const {
    double s = 0.0;
    for (const auto& z : m) s += std::norm(z);
    return std::sqrt(s);
}

bool DenseOperator::is_hermitian(double tol) const {
    const double scale = std::max(1.0, frobenius_norm());
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j)
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol * scale) return false;
    return true;
}

DenseOperator operator+(const DenseOperator& a, const DenseOperator& b) {
    DenseOperator r;
    for (size_t i = 0; i < 16; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
}

DenseOperator operator-(const DenseOperator& a, const DenseOperator& b) {
    DenseOperator r;
    for (size_t i = 0; i < 16; ++i) r.m[i] = a.m[i] - b.m[i];
    return r;
}

DenseOperator operator*(const DenseOperator& a, const DenseOperator& b) {
    DenseOperator r;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (int j = 0; j < 4; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

DenseOperator operator*(cplx s, const DenseOperator& a) {
    DenseOperator r;
    for (size_t i = 0; i < 16; ++i) r.m[i] = s * a.m[i];
    return r;
}

namespace {

// One complex Jacobi rotation eliminating the (p,q) element of a Hermitian
// matrix; accumulates the rotation into v.
void jacobi_rotate(DenseOperator& a, DenseOperator& v, int p, int q) {
    const cplx apq = a(p, q);
    const double aapq = std::abs(apq);
    if (aapq == 0.0) return;
    const cplx phase = apq / aapq;
    const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * aapq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    // Columns: col_p' = c col_p - s conj(phase) col_q ; col_q' = s phase col_p + c col_q
    for (int i = 0; i < 4; ++i) {
        const cplx aip = a(i, p), aiq = a(i, q);
        a(i, p) = c * aip - s * std::conj(phase) * aiq;
        a(i, q) = s * phase * aip + c * aiq;
        const cplx vip = v(i, p), viq = v(i, q);
        v(i, p) = c * vip - s * std::conj(phase) * viq;
        v(i, q) = s * phase * vip + c * viq;
    }
    for (int i = 0; i < 4; ++i) {
        const cplx api = a(p, i), aqi = a(q, i);
        a(p, i) = c * api - s * phase * aqi;
        a(q, i) = s * std::conj(phase) * api + c * aqi;
    }
}

double off_diagonal_norm(const DenseOperator& a) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace

EigenSystem eigen_hermitian(const DenseOperator& a) {
    if (!a.is_hermitian(1e-10)) throw AlgebraError("eigen_hermitian: non-Hermitian input");
    DenseOperator w = a;
    // Symmetrize exactly so the iteration sees a Hermitian matrix.
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            const cplx avg = 0.5 * (w(i, j) + std::conj(w(j, i)));
            w(i, j) = avg;
            w(j, i) = std::conj(avg);
        }
        w(i, i) = w(i, i).real();
    }
    DenseOperator v = DenseOperator::identity();
    const double scale = std::max(1.0, w.frobenius_norm());
    for (int sweep = 0; sweep < 60; ++sweep) {
        if (off_diagonal_norm(w) <= 1e-15 * scale) break;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) jacobi_rotate(w, v, p, q);
    }
    EigenSystem es;
    std::array<int, 4> order{0, 1, 2, 3};
    std::array<double, 4> vals{};
    for (int i = 0; i < 4; ++i) vals[static_cast<size_t>(i)] = w(i, i).real();
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return vals[static_cast<size_t>(i)] < vals[static_cast<size_t>(j)];
    });
    for (int i = 0; i < 4; ++i) {
        es.values[static_cast<size_t>(i)] = vals[static_cast<size_t>(order[static_cast<size_t>(i)])];
        for (int r = 0; r < 4; ++r) es.vectors(r, i) = v(r, order[static_cast<size_t>(i)]);
    }
    return es;
}

SvdSystem svd(const DenseOperator& a) {
    DenseOperator w = a;                          // columns rotated in place
    DenseOperator v = DenseOperator::identity();  // accumulated right rotations
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) {
                cplx g{};
                double np = 0.0, nq = 0.0;
                for (int i = 0; i < 4; ++i) {
                    g += std::conj(w(i, p)) * w(i, q);
                    np += std::norm(w(i, p));
                    nq += std::norm(w(i, q));
                }
                const double ag = std::abs(g);
                if (ag <= 1e-16 * std::sqrt(np * nq) || ag == 0.0) continue;
                off = std::max(off, ag / std::max(std::sqrt(np * nq), 1e-300));
                const cplx phase = g / ag;
                const double tau = (nq - np) / (2.0 * ag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int i = 0; i < 4; ++i) {
                    const cplx wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * std::conj(phase) * wq;
                    w(i, q) = s * phase * wp + c * wq;
                    const cplx vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * std::conj(phase) * vq;
                    v(i, q) = s * phase * vp + c * vq;
                }
            }
        if (off < 1e-15) break;
    }
    SvdSystem out;
    std::array<double, 4> sig{};
    for (int j = 0; j < 4; ++j) {
        double n = 0.0;
        for (int i = 0; i < 4; ++i) n += std::norm(w(i, j));
        sig[static_cast<size_t>(j)] = std::sqrt(n);
    }
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return sig[static_cast<size_t>(i)] > sig[static_cast<size_t>(j)];
    });
    const double smax = sig[static_cast<size_t>(order[0])];
    // Columns with sigma at the rounding floor of the rotations carry a
    // noise direction, not data; drop them for deterministic completion.
    const double floor = 1e-12 * smax;
    out.rank_deficient = smax <= 0.0 || sig[static_cast<size_t>(order[3])] <= floor;
    for (int j = 0; j < 4; ++j) {
        const int src = order[static_cast<size_t>(j)];
        const double s = sig[static_cast<size_t>(src)];
        out.sigma[static_cast<size_t>(j)] = s;
        for (int i = 0; i < 4; ++i) {
            out.v(i, j) = v(i, src);
            out.u(i, j) = s > floor && s > 1e-280 ? w(i, src) / s : cplx{};
        }
    }
    // Deterministic completion of null columns of U by Gram-Schmidt against
    // the canonical basis.
    for (int j = 0; j < 4; ++j) {
        double n = 0.0;
        for (int i = 0; i < 4; ++i) n += std::norm(out.u(i, j));
        if (n > 0.5) continue;
        for (int cand = 0; cand < 4; ++cand) {
            std::array<cplx, 4> col{};
            col[static_cast<size_t>(cand)] = 1.0;
            for (int k = 0; k < 4; ++k) {
                if (k == j) continue;
                cplx proj{};
                for (int i = 0; i < 4; ++i) proj += std::conj(out.u(i, k)) * col[static_cast<size_t>(i)];
                for (int i = 0; i < 4; ++i) col[static_cast<size_t>(i)] -= proj * out.u(i, k);
            }
            double cn = 0.0;
            for (const auto& z : col) cn += std::norm(z);
            if (cn > 1e-6) {
                cn = std::sqrt(cn);
                for (int i = 0; i < 4; ++i) out.u(i, j) = col[static_cast<size_t>(i)] / cn;
                break;
            }
        }
    }
    return out;
}

ModeOperators build_mode_operators(ModeModel model) {
    // Fermionic creation operators on (|0>, |up>, |dn>, |updn>) with the
    // convention |updn> = c+_up c+_dn |0>.
    DenseOperator cu, cd;  // c+_up, c+_dn
    cu(1, 0) = 1.0;
    cu(3, 2) = 1.0;
    cd(2, 0) = 1.0;
    cd(3, 1) = -1.0;
    const DenseOperator au = cu.adjoint(), ad = cd.adjoint();
    const DenseOperator n_up = cu * au, n_dn = cd * ad;
    ModeOperators ops;
    ops.number = n_up + n_dn;
    if (model == ModeModel::stoner) {
        ops.f_zero = 0.5 * (n_up - n_dn);
        ops.f_plus = cu * ad;  // S^+ = c+_up c_dn
        ops.f_minus = cd * au;
        // I_s = n(2 - n): projector onto single occupancy
        ops.proj = 2.0 * ops.number - ops.number * ops.number;
    } else {
        ops.f_zero = 0.5 * (ops.number - DenseOperator::identity());
        ops.f_plus = cu * cd;  // T^+ = c+_up c+_dn
        ops.f_minus = ad * au;
        // I_t = (n - 1)^2: projector onto empty/doubly occupied states
        const DenseOperator nm1 = ops.number - DenseOperator::identity();
        ops.proj = nm1 * nm1;
    }
    ops.z_proj = DenseOperator::identity() - ops.proj;
    return ops;
}

DenseOperator field_operator(const ModeOperators& ops, const SpinVector& h) {
    return cplx(0.5) * (h.plus * ops.f_minus + h.minus * ops.f_plus) + cplx(h.zero) * ops.f_zero;
}

DenseOperator dense_exp(const DenseOperator& h) {
    if (!h.is_hermitian(1e-10)) throw AlgebraError("dense_exp: non-Hermitian input");
    const EigenSystem es = eigen_hermitian(h);
    DenseOperator r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            cplx s{};
            for (int k = 0; k < 4; ++k)
                s += es.vectors(i, k) * std::exp(es.values[static_cast<size_t>(k)]) * std::conj(es.vectors(j, k));
            r(i, j) = s;
        }
    return r;
}

DenseOperator gibbs_state(const DenseOperator& exponent) {
    // Shift by the largest eigenvalue before exponentiating so beta E up to
    // ~700 stays representable.
    const EigenSystem es = eigen_hermitian(exponent);
    const double shift = es.values[3];
    DenseOperator r;
    double z = 0.0;
    for (int k = 0; k < 4; ++k) z += std::exp(es.values[static_cast<size_t>(k)] - shift);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            cplx s{};
            for (int k = 0; k < 4; ++k)
                s += es.vectors(i, k) * std::exp(es.values[static_cast<size_t>(k)] - shift) * std::conj(es.vectors(j, k));
            r(i, j) = s / z;
        }
    return r;
}

DenseOperator dense_sqrt(const DenseOperator& rho) {
    if (!rho.is_hermitian(1e-10)) throw AlgebraError("dense_sqrt: non-Hermitian input");
    const EigenSystem es = eigen_hermitian(rho);
    const double scale = std::max({1.0, std::abs(es.values[0]), std::abs(es.values[3])});
    if (es.values[0] < -1e-9 * scale) throw AlgebraError("dense_sqrt: non-physical state (negative eigenvalue)");
    DenseOperator r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            cplx s{};
            for (int k = 0; k < 4; ++k)
                s += es.vectors(i, k) * std::sqrt(std::max(es.values[static_cast<size_t>(k)], 0.0)) *
                     std::conj(es.vectors(j, k));
            r(i, j) = s;
        }
    return r;
}

double dense_fidelity(const DenseOperator& rho_a, const DenseOperator& rho_b) {
    // Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)) equals the nuclear norm of
    // sqrt(rho_a) sqrt(rho_b); the SVD route keeps full relative accuracy on
    // the small singular values of near-pure states.
    const SvdSystem s = svd(dense_sqrt(rho_a) * dense_sqrt(rho_b));
    double f = 0.0;
    for (double v : s.sigma) f += v;
    return f;
}

PolarResult polar_unitary(const DenseOperator& rho_a, const DenseOperator& rho_b) {
    const DenseOperator msq = dense_sqrt(rho_a) * dense_sqrt(rho_b);
    const SvdSystem s = svd(msq);
    // M = W Sigma X^dag, |M| = W Sigma W^dag, V = W X^dag, U = V^dag = X W^dag.
    PolarResult out;
    out.degenerate = s.rank_deficient;
    out.unitary = s.v * s.u.adjoint();
    return out;
}

}  // namespace phasefid
