#pragma once

#include <array>
#include <complex>
#include <span>
#include <stdexcept>

// Closed-form su(2) trace/exponential identities for the per-mode spin
// (n, S^z, S^+-) and Nambu (T^0, T^+-) operator triples, together with a
// dense 4x4 oracle over the per-mode Fock basis used to validate every
// closed form. Basis ordering is fixed as (|0>, |up>, |dn>, |updn>).

namespace phasefid {

using cplx = std::complex<double>;

struct AlgebraError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Field vectors
// ---------------------------------------------------------------------------

// The 3-component field vector (h^+, h^-, h^0) multiplying an su(2) triple.
// A physical vector has h^- = conj(h^+); raw vectors may violate this and
// are only meant for oracle tests.
struct SpinVector {
    cplx plus{0.0, 0.0};
    cplx minus{0.0, 0.0};
    double zero = 0.0;

    static SpinVector physical(cplx h_plus, double h_zero) {
        return SpinVector{h_plus, std::conj(h_plus), h_zero};
    }
    static SpinVector raw(cplx h_plus, cplx h_minus, double h_zero) {
        return SpinVector{h_plus, h_minus, h_zero};
    }

    bool is_physical(double tol = 1e-12) const;

    // h^2 = (h^0)^2 + h^+ h^-, complex for raw vectors.
    cplx norm2_raw() const { return zero * zero + plus * minus; }
    // Norm of a physical vector; rejects raw vectors with complex norm^2.
    double norm() const;
};

inline SpinVector operator+(const SpinVector& a, const SpinVector& b) {
    return SpinVector{a.plus + b.plus, a.minus + b.minus, a.zero + b.zero};
}
inline SpinVector operator*(double s, const SpinVector& a) {
    return SpinVector{s * a.plus, s * a.minus, s * a.zero};
}

// Scalar product (1/2)(a^+ b^- + a^- b^+) + a^0 b^0.
cplx vec_dot(const SpinVector& a, const SpinVector& b);

// ---------------------------------------------------------------------------
// Closed-form traces
// ---------------------------------------------------------------------------

// Tr[e^{h.S}] = 2(1 + cosh(h/2))
double trace_exp_spin(const SpinVector& h);

// Tr[e^{alpha n + h.S}] = 2 e^alpha (cosh alpha + cosh(h/2))
double trace_exp_number_spin(double alpha, const SpinVector& h);
double log_trace_exp_number_spin(double alpha, const SpinVector& h);

// Tr[e^{a.T}] = 2(1 + cosh(a/2)); identical functional form on the Nambu triple.
double trace_exp_nambu(const SpinVector& a);
double log_trace_exp_nambu(const SpinVector& a);

// cosh c with e^{a.T/2} e^{b.T} e^{a.T/2} = e^{2c.T}:
// cosh c = cosh(a/2)cosh(b/2) + sinh(a/2)sinh(b/2) (a.b)/(ab).
// Zero-norm vectors are handled by the analytic limit.
double cosh_c(const SpinVector& a, const SpinVector& b);
double log_cosh_c(const SpinVector& a, const SpinVector& b);

// ---------------------------------------------------------------------------
// Dense 4x4 oracle
// ---------------------------------------------------------------------------

// Dense operator on the per-mode Fock space, basis (|0>, |up>, |dn>, |updn>).
struct DenseOperator {
    std::array<cplx, 16> m{};

    cplx& operator()(int r, int c) { return m[static_cast<size_t>(4 * r + c)]; }
    const cplx& operator()(int r, int c) const { return m[static_cast<size_t>(4 * r + c)]; }

    static DenseOperator zero() { return DenseOperator{}; }
    static DenseOperator identity();

    DenseOperator adjoint() const;
    cplx trace() const;
    double frobenius_norm() const;
    bool is_hermitian(double tol = 1e-12) const;
};

DenseOperator operator+(const DenseOperator& a, const DenseOperator& b);
DenseOperator operator-(const DenseOperator& a, const DenseOperator& b);
DenseOperator operator*(const DenseOperator& a, const DenseOperator& b);
DenseOperator operator*(cplx s, const DenseOperator& a);
inline DenseOperator operator*(double s, const DenseOperator& a) { return cplx(s, 0.0) * a; }

// Hermitian eigendecomposition (cyclic complex Jacobi). values ascending,
// vectors unitary with A = V diag(values) V^dagger.
struct EigenSystem {
    std::array<double, 4> values{};
    DenseOperator vectors;
};
EigenSystem eigen_hermitian(const DenseOperator& a);

// Singular value decomposition a = U diag(sigma) V^dagger (one-sided Jacobi),
// sigma descending. rank_deficient is set when sigma_min <= 1e-14 sigma_max;
// the unitary factors are then completed deterministically.
struct SvdSystem {
    std::array<double, 4> sigma{};
    DenseOperator u;
    DenseOperator v;
    bool rank_deficient = false;
};
SvdSystem svd(const DenseOperator& a);

// Per-mode operator families.
enum class ModeModel { stoner, bcs };

struct ModeOperators {
    DenseOperator f_zero;   // S^z or T^0
    DenseOperator f_plus;   // S^+ or T^+
    DenseOperator f_minus;  // S^- or T^-
    DenseOperator proj;     // I_s or I_t (algebra identity/projector)
    DenseOperator number;   // n = n_up + n_dn
    DenseOperator z_proj;   // I - proj
};
ModeOperators build_mode_operators(ModeModel model);

// h.F = (1/2)(h^+ F^- + h^- F^+) + h^0 F^0 over the given triple.
DenseOperator field_operator(const ModeOperators& ops, const SpinVector& h);

// Eigendecomposition-based exponential of a Hermitian operator.
DenseOperator dense_exp(const DenseOperator& h);

// Gibbs state e^X / Tr e^X of a Hermitian exponent.
DenseOperator gibbs_state(const DenseOperator& exponent);

// Principal square root of a Hermitian PSD operator. Eigenvalues within
// -1e-12 are clamped to zero; below -1e-9 the state is rejected.
DenseOperator dense_sqrt(const DenseOperator& rho);

// Uhlmann fidelity Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)).
double dense_fidelity(const DenseOperator& rho_a, const DenseOperator& rho_b);

// Uhlmann connection U_ab = V_ab^dagger from the polar decomposition
// sqrt(rho_a) sqrt(rho_b) = |sqrt(rho_a) sqrt(rho_b)| V_ab, so that
// Tr[sqrt(rho_a) sqrt(rho_b) U_ab] = F(rho_a, rho_b).
struct PolarResult {
    DenseOperator unitary;
    bool degenerate = false;  // rank-deficient product, completion arbitrary
};
PolarResult polar_unitary(const DenseOperator& rho_a, const DenseOperator& rho_b);

}  // namespace phasefid
