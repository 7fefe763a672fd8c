#pragma once

#include <span>
#include <vector>

#include "phasefid/algebra.hpp"
#include "phasefid/numerics.hpp"

// BCS mean-field superconductivity in rescaled units: k_B T and the gap in
// hbar omega_D units, v = D_F V, mode density nu = V D_F hbar omega_D. The
// chemical potential is pinned to eps_F, so mode energies are eps_bar in
// [-1, 1] inside the Debye window. The gap solves
//   1 = v Int_0^1 dx tanh(sqrt(x^2 + d^2)/(2t)) / sqrt(x^2 + d^2).

namespace phasefid::bcs {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Params {
    double v = 0.0;
    double t = 0.0;
    double nu = 2.0;
    double dt = 0.0;
    double dv = 0.0;
};

struct GapState {
    double v = 0.0;
    double t = 0.0;
    double gap = 0.0;
    bool converged = false;
};

struct ParameterPoint {
    double t = 0.0;
    double coupling = 0.0;
};

// Residual of the rescaled gap equation at gap d; t = 0 uses the arcsinh
// limit of the integrand.
double gap_residual(double v, double t, double gap);

// Gap with residual <= 1e-12, or 0 when no positive root exists.
GapState solve_gap(double v, double t);

// Root of the linearized gap equation 1 = v Int_0^1 tanh(x/(2t))/x dx.
double critical_temperature(double v);

// One parameter point seen by a single mode: inverse temperature, mode
// energy eps_bar, and the (possibly complex) gap.
struct ModePoint {
    double beta = 1.0;
    double eps = 0.0;
    cplx gap{0.0, 0.0};
};

// Nambu field vector (2 beta conj(gap), 2 beta gap, -2 beta eps_bar).
SpinVector nambu_vector(const ModePoint& p);

struct ModeTriple {
    double f = 1.0;
    double c = 1.0;
    double h = 1.0;
    double uhl_dev = 0.0;  // 2-norm of (U_ab - I) on the I_t block
};

// Per-mode F (Eqs. 21-22 form), C on the mean vector, H from the
// half-generator product trace; log-space throughout.
ModeTriple mode_triple(const ModePoint& a, const ModePoint& b);

double mode_log_f(const ModePoint& a, const ModePoint& b);
double mode_log_c(const ModePoint& a, const ModePoint& b);
double mode_log_h(const ModePoint& a, const ModePoint& b);

// Fast per-mode Uhlmann deviation via the 2x2 I_t block.
double mode_uhl_dev(const ModePoint& a, const ModePoint& b);

struct FidelityResult {
    double f = 1.0;
    double c = 1.0;
    double h = 1.0;
    GapState state_a;
    GapState state_b;
};

// Product over the Debye window converted to nu * Int_{-1}^{1} ln X(eps)
// d eps on a graded Gauss-Legendre rule; modes outside the window
// contribute a commuting-case factor only when dt != 0.
FidelityResult total_fidelity(const Params& p);

// T = 0 ground-state fidelity between couplings va and vb.
double zero_t_fidelity(double va, double vb, double nu);

struct UhlmannSample {
    double eps = 0.0;
    double uhl_dev = 0.0;
    double identity_residual = 0.0;  // |(H_k - F_k) - Tr[|M|(U - I)]|
    bool degenerate = false;
};

// Dense per-mode Uhlmann connection along the offset (dt, dv) at each mode
// energy; checks the H - F trace identity mode by mode.
std::vector<UhlmannSample> uhlmann_profile(const Params& p, std::span<const double> eps_grid);

// Ordered product of pairwise connection unitaries around a closed loop for
// a single mode. Requires >= 3 points with first == last and t > 0.
DenseOperator loop_composition(std::span<const ParameterPoint> points, double eps);

// 2-norm of the (|0>, |updn>) block of a dense operator; stable when the
// block's singular values are degenerate (U - I of an SU(2) rotation).
double block_two_norm(const DenseOperator& d);

// Graded quadrature rule on [0, 1] used for the window integrals (panels
// geometrically refined toward eps = 0 where the transition physics lives).
const GaussRule& window_rule();

}  // namespace phasefid::bcs
